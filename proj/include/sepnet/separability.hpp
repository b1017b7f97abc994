#ifndef SEPNET_SEPARABILITY_HPP
#define SEPNET_SEPARABILITY_HPP

#include <optional>
#include <vector>

#include "sepnet/cpt.hpp"
#include "sepnet/tree_rep.hpp"

namespace sepnet {

struct SeparationOptions {
    double eps_sep = kDefaultEpsSep;
};

// Cell at which the additivity identity P(z|x) = P1(z) + sum_i alpha_i(x_i, z)
// fails: the full parent assignment, the child value, the table's value and
// the value the identity demands.
struct AdditivityWitness {
    Assignment parents;
    int child_value = 0;
    double table_value = 0.0;
    double additive_value = 0.0;
};

// Construction record of a decomposition: the child value most affected by
// the parents, the reference parent assignment minimizing it, the baseline
// row, and the per-block delta tables with their ranges.
struct DecompositionTrace {
    int z1 = 0;
    Assignment reference;
    Factor baseline;               // over the child
    std::vector<Factor> deltas;    // per block, over (block vars..., child); rows sum to 0
    std::vector<double> ranges;    // per block, max delta at z1 over block assignments
};

// Convex mixture of per-block conditionals reproducing a source CPT:
// P(Z | parents) = sum_i weights[i] * components[i](Z | blocks[i]).
struct SeparableDecomposition {
    Variable child;
    std::vector<VarList> blocks;
    std::vector<double> weights;
    std::vector<Cpt> components;

    // Max reconstruction error against a source table, over all cells.
    double reconstruction_error(const Cpt& source) const;
    void validate(double eps_norm = kDefaultEpsNorm, double eps_sep = kDefaultEpsSep,
                  const Cpt* source = nullptr) const;
};

struct Separation {
    std::optional<SeparableDecomposition> decomposition;
    std::optional<DecompositionTrace> trace;
    std::optional<AdditivityWitness> witness;
    bool degenerate_child = false; // child independent of all parents

    bool ok() const { return decomposition.has_value(); }
};

// Decide separability of the CPT into the given disjoint parent blocks and
// construct the mixture when it exists. Blocks must partition the parents
// (empty blocks are allowed and receive weight zero).
Separation separate_n(const Cpt& cpt, std::vector<VarList> blocks,
                      const SeparationOptions& opts = {});

// Two-block convenience form.
Separation separate_two(const Cpt& cpt, const VarList& left, const VarList& right,
                        const SeparationOptions& opts = {});

// One separable decomposition per assignment of the conditioning set W.
struct ConditionalDecomposition {
    VarList given;
    std::vector<Assignment> assignments;      // one per W assignment, table order
    std::vector<SeparableDecomposition> entries;
    std::vector<double> gamma;                // weight of the first block per entry
};

struct ConditionalSeparation {
    std::optional<ConditionalDecomposition> decomposition;
    std::optional<Assignment> failed_at;
    std::optional<AdditivityWitness> witness;

    bool ok() const { return decomposition.has_value(); }
};

// Decide conditional separability of P(Z | X u Y) given W: every slice at an
// assignment of W must separate into blocks X-W and Y-W. Requires X u Y to
// cover the parents and the residual blocks to be disjoint.
ConditionalSeparation conditional_separate(const Cpt& cpt, const VarList& x, const VarList& y,
                                           const VarList& given,
                                           const SeparationOptions& opts = {});

// Recursive decomposition along a tree representation: at each internal node
// a map from root-set assignments to (weights, child decompositions); at each
// leaf the conditioned CPT.
struct TreeDecomposition {
    // leaf payload
    std::optional<Cpt> leaf_cpt;
    VarList leaf_subset; // original subset labels (may exceed the cpt parents)

    // internal payload
    VarList root_set;
    struct Branch {
        std::vector<double> weights;
        std::vector<TreeDecomposition> children;
    };
    std::vector<Branch> branches; // indexed by root-set assignment, table order

    bool is_leaf() const { return leaf_cpt.has_value(); }

    // Evaluate the decomposition at a full parent assignment (tests and
    // document re-validation).
    double evaluate(const Assignment& parents, int z) const;

    double reconstruction_error(const Cpt& source) const;
};

struct TreeSeparation {
    std::optional<TreeDecomposition> decomposition;
    std::vector<std::size_t> failure_path; // child indices from the root
    std::optional<Assignment> failed_at;
    std::optional<AdditivityWitness> witness;

    bool ok() const { return decomposition.has_value(); }
};

// Decide T-separability of the CPT along the tree. The tree's leaf subsets
// must cover the parents; leaf subsets may mention variables that are not
// parents (they are ignored for block construction).
TreeSeparation tree_separate(const Cpt& cpt, const TreeRepresentation& tree,
                             const SeparationOptions& opts = {});

struct OracleOptions {
    std::size_t parent_space_cap = 4096;
    double eps_sep = kDefaultEpsSep;
    double pivot_tol = 1e-10;
};

// Independent sufficiency decision: true iff the map from a joint parent
// distribution to the child's distribution depends only on the marginals over
// the subsets. Builds the linear map M from joints to stacked subset
// marginals and checks that the conditional-probability matrix annihilates a
// basis of null(M). This is the oracle the constructive routes are validated
// against; it shares no code with them.
bool sufficiency_oracle(const Cpt& cpt, const std::vector<VarList>& subsets,
                        const OracleOptions& opts = {});

struct ApplyOptions {
    double eps_consistency = kDefaultEpsConsistency;
    // When set, shared-variable marginals are read from the lowest-indexed
    // containing subset and cross-checked against the others. Callers that
    // validate the whole MarginalSet once per step turn this off.
    bool check_consistency = true;
};

// Evaluate the child distribution from subset marginals:
// sum_i weights[i] * sum_{x_i} q_i(x_i) P_i(Z | x_i).
Factor apply_decomposition(const SeparableDecomposition& d, const MarginalSet& marginals,
                           const ApplyOptions& opts = {});

// Tree form: at each internal node, weight child evaluations by q(w) and the
// branch weights, passing conditional marginals q(.|w) down.
Factor apply_decomposition(const TreeDecomposition& d, const MarginalSet& marginals,
                           const ApplyOptions& opts = {});

namespace detail {

// Basis of the null space of a dense row-major matrix (rows x cols), each
// vector normalized to unit max-abs. Gauss-Jordan with partial pivoting;
// pivots at or below pivot_tol count as zero.
std::vector<std::vector<double>> null_space_basis(std::vector<std::vector<double>> rows,
                                                  std::size_t cols, double pivot_tol);

} // namespace detail

} // namespace sepnet

#endif
