#ifndef SEPNET_IO_HPP
#define SEPNET_IO_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sepnet/dbn.hpp"
#include "sepnet/inference.hpp"
#include "sepnet/separability.hpp"
#include "sepnet/transform.hpp"

namespace sepnet {

// Malformed or semantically invalid document.
class DocumentError : public FactorError {
  public:
    explicit DocumentError(const std::string& what) : FactorError(what) {}
};

struct NetworkDocument {
    VarList variables;
    std::vector<Cpt> cpts;
};

struct DbnDocument {
    DbnModel model;
    std::optional<std::vector<VarList>> family;
    std::optional<TreeRepresentation> tree;
};

using ModelDocument = std::variant<NetworkDocument, DbnDocument>;

ModelDocument parse_model(const std::string& text);
std::string write_model(const ModelDocument& doc);
std::string write_network(const NetworkDocument& doc);
std::string write_dbn(const DbnDocument& doc);

struct DecompositionDocument {
    SeparableDecomposition decomposition;
    std::optional<DecompositionTrace> trace;
    bool degenerate = false;
};

std::string write_decomposition(const DecompositionDocument& doc);
// Re-validates the decomposition invariants (weight simplex, component rows).
DecompositionDocument parse_decomposition(const std::string& text);

struct TreeDecompositionDocument {
    TreeDecomposition root;
};

std::string write_tree_decomposition(const TreeDecompositionDocument& doc);
TreeDecompositionDocument parse_tree_decomposition(const std::string& text);

struct FactorsDocument {
    VarList variables;
    std::vector<std::string> selectors;
    std::vector<Factor> factors;
};

std::string write_factors(const FactorsDocument& doc);
FactorsDocument parse_factors(const std::string& text);

struct PredictionDocument {
    int steps = 0;
    bool exact = false;
    bool approximate = false;
    std::vector<MarginalSet> marginals; // marginal engine: one set per t
    std::vector<Factor> joints;         // exact engine: one joint per t
};

std::string write_prediction(const PredictionDocument& doc);
PredictionDocument parse_prediction(const std::string& text);

struct CheckResultDocument {
    std::string mode; // separable | conditional | tree | self_sufficient
    bool sufficient = false;
    bool degenerate = false;
    std::optional<bool> oracle;
    std::optional<AdditivityWitness> witness;
    std::optional<Assignment> failed_at;
    std::vector<std::size_t> failure_path;
    std::string failed_subset;
    std::vector<double> gamma; // conditional mode: weight of the first block per assignment
};

std::string write_check_result(const CheckResultDocument& doc);

struct ComparisonDocument {
    int steps = 0;
    std::vector<double> per_step_max_divergence; // family subsets vs exact
    double max_divergence = 0.0;
    struct PairDivergence {
        VarList vars;
        std::vector<double> per_step; // product-of-marginals vs exact joint marginal
        double max = 0.0;
    };
    std::vector<PairDivergence> pairs;
    CostReport cost;
};

std::string write_comparison(const ComparisonDocument& doc);

// 17-significant-digit decimal form; round-trips doubles bit-exactly.
std::string format_double(double v);

} // namespace sepnet

#endif
