#ifndef SEPNET_DBN_HPP
#define SEPNET_DBN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepnet/separability.hpp"

namespace sepnet {

// Next-slice copy of a state variable (primed name, same cardinality).
Variable next_copy(const Variable& v);

// Dynamic model: state variables plus one transition CPT per state variable,
// child = the variable's next-slice copy, parents drawn only from the
// previous slice. The initial distribution is a full joint over the state or
// a set of subset marginals.
struct DbnModel {
    VarList state;
    std::vector<Cpt> transitions; // same order as state; child = next_copy(state[i])
    std::optional<Factor> initial_joint;
    std::optional<MarginalSet> initial_marginals;

    const Cpt& transition_for(const std::string& state_var) const;
    void validate() const;

    // Product CPT P(subset' | previous slice) over the union of the member
    // transitions' parents, with the next-slice members flattened into one
    // compound child variable (mixed-radix over the members in subset order).
    Cpt subset_transition(const VarList& subset, std::size_t parent_space_cap) const;
};

// A verified family of state subsets covering the state, each subset's
// next-slice distribution decomposed along the family tree. The stored
// decompositions are the evaluable prediction maps.
struct SubsystemFamily {
    std::vector<VarList> subsets;
    TreeRepresentation tree;
    std::vector<TreeDecomposition> decompositions; // per subset
    bool oracle_validated = false; // independent oracle cross-check ran

    std::size_t max_subset_size() const;
};

struct SelfSufficiencyOptions {
    SeparationOptions separation;
    std::size_t parent_space_cap = 1u << 20;
    std::size_t oracle_state_cap = 4096;
    bool cross_validate = true; // run the oracle when the state space allows
};

struct SelfSufficiencyCheck {
    std::optional<SubsystemFamily> family;
    // failure details
    VarList failed_subset;
    std::vector<std::size_t> failure_path;
    std::optional<Assignment> failed_at;
    std::optional<AdditivityWitness> witness;

    bool ok() const { return family.has_value(); }
};

// Verify that the family is self-sufficient: for each subset, the product
// transition CPT must tree-separate along the family tree. The tree's leaves
// must be exactly the family subsets. Cross-validated by the sufficiency
// oracle when the state space is within the oracle cap.
SelfSufficiencyCheck check_self_sufficient(const DbnModel& model,
                                           const std::vector<VarList>& family,
                                           const TreeRepresentation& tree,
                                           const SelfSufficiencyOptions& opts = {});

// Subset marginals for the initial distribution.
MarginalSet initial_marginals(const DbnModel& model, const std::vector<VarList>& family);

// Exact prediction by marginal propagation: element t of the result holds the
// subset marginals at time t, for t in [0, horizon].
std::vector<MarginalSet> predict_marginals(const SubsystemFamily& family, const DbnModel& model,
                                           int horizon,
                                           double eps_consistency = kDefaultEpsConsistency);

// Exact prediction by propagating the full joint (the baseline oracle).
// Requires an initial joint and a state space within the cap.
std::vector<Factor> predict_exact(const DbnModel& model, int horizon,
                                  std::size_t state_space_cap = 1u << 20);

enum class FilterPolicy {
    Strict,      // error unless every observed variable appears in all subsets
    Demonstrate, // condition only the subsets containing the variable; approximate
};

struct FilterOutcome {
    MarginalSet marginals;
    bool approximate = false;
};

// Condition subset marginals on evidence over state variables. Scopes are
// preserved (evidence variables keep a point mass). Strict filtering is exact
// and requires the evidence variables to appear in every subset.
FilterOutcome filter_step(const SubsystemFamily& family, const MarginalSet& marginals,
                          const Assignment& evidence, FilterPolicy policy);

struct CostReport {
    std::uint64_t marginal_ops = 0; // measured multiply-adds of predict_marginals
    std::uint64_t exact_ops = 0;    // measured multiply-adds of predict_exact
    double bound_marginal = 0.0;    // T * n * b^m
    double bound_exact = 0.0;       // T * b^M
    int horizon = 0;
    int family_size = 0;       // n
    int max_subset_size = 0;   // m
    int max_cardinality = 0;   // b
    int state_size = 0;        // M
};

CostReport cost_report(const SubsystemFamily& family, const DbnModel& model, int horizon);

// ---- generators --------------------------------------------------------

// Ring-of-locations weather model: a shared wind-direction variable W plus one
// variable per location. Given the previous wind direction, each location
// draws its next value from one source location (selection distribution per
// direction) through a pairwise packet model.
struct WeatherModelSpec {
    int locations = 0;
    int directions = 0;
    int location_cardinality = 2;
    std::vector<std::vector<double>> wind_transition; // [w][w'] rows sum to 1
    // selection[w][i][j]: probability that location i draws from location j
    // given previous wind w; each selection[w][i] is a distribution over j.
    std::vector<std::vector<std::vector<double>>> selection;
    // packet[i][j]: row-stochastic |X_j| x |X_i| table, used when selection>0
    std::vector<std::vector<std::vector<std::vector<double>>>> packet;
    std::vector<double> initial_joint; // over (W, X_0, ..., X_{N-1}); may be empty

    void validate() const;
};

struct GeneratedDbn {
    DbnModel model;
    std::vector<VarList> family;
    TreeRepresentation tree;
};

GeneratedDbn make_weather(const WeatherModelSpec& spec);

// Seeded demo instance: wind transitions random with a diagonal boost, each
// location sourced from {itself, right neighbor} with a direction-dependent
// split, random packet models, random correlated initial joint.
WeatherModelSpec demo_weather_spec(int locations, int directions, std::uint64_t seed);

// Two independent copy chains with a correlated initial joint. Each variable
// alone is exactly predictable from its own marginal; the pair joint is not
// recoverable from the propagated marginals.
GeneratedDbn make_figure5();

// Hierarchical mode-mixture model. Each mode routes every subsystem's next
// state from exactly one source subsystem; a variable shared between
// subsystems must be routed identically by all sharers. The mode distribution
// may depend only on root-located variables.
struct ModeSpec {
    VarList state;
    TreeRepresentation tree; // complete tree representation of the subsystems
    std::vector<VarList> subsystems;

    struct Mode {
        std::vector<std::size_t> source; // per subsystem: index of the source subsystem
        std::map<std::string, Cpt> var_models; // per state variable: P(v' | parents in source)
    };
    std::vector<Mode> modes;

    VarList mode_given; // subset of root-located variables
    std::vector<std::vector<double>> mode_dist; // per mode_given assignment, over modes
    std::vector<double> initial_joint; // over state; may be empty

    void validate() const;
};

GeneratedDbn make_from_modes(const ModeSpec& spec);

// Seeded demo instance: seven binary variables in a two-level hierarchy with
// four subsystems and four modes (top-down, two take-overs, catastrope).
ModeSpec demo_mode_spec(std::uint64_t seed);

// Oracle verdict on the compound-child merging rule: with X1,Y1 sufficient
// for cpt1's child and X2,Y2 sufficient for cpt2's child (verified first),
// returns whether the four pairwise unions are sufficient for the product
// child Z1 x Z2.
bool merge_rule_check(const Cpt& cpt1, const Cpt& cpt2, const VarList& x1, const VarList& y1,
                      const VarList& x2, const VarList& y2, const OracleOptions& opts = {});

// Product CPT with the two children flattened into one compound variable;
// the children must be conditionally independent given the union parents
// (which the construction makes true by multiplying the tables).
Cpt product_child_cpt(const Cpt& cpt1, const Cpt& cpt2, const std::string& pair_name);

} // namespace sepnet

#endif
