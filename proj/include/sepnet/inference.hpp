#ifndef SEPNET_INFERENCE_HPP
#define SEPNET_INFERENCE_HPP

#include <cstdint>
#include <vector>

#include "sepnet/factor.hpp"

namespace sepnet {

struct EliminationReport {
    VarList ordering;
    std::vector<int> step_scope_sizes; // scope of the product factor before each sum-out
    std::uint64_t multiply_adds = 0;

    int max_intermediate_scope() const {
        int m = 0;
        for (int s : step_scope_sizes) m = std::max(m, s);
        return m;
    }
};

struct EliminationResult {
    Factor posterior;  // normalized over the query (scalar 1 for empty query)
    double mass = 0.0; // total mass before normalization; P(evidence) for calibrated inputs
    EliminationReport report;
};

// Greedy min-fill ordering over the factors' interaction graph, excluding the
// variables in `keep`. Ties break lexicographically by name.
VarList min_fill_ordering(const std::vector<Factor>& factors, const VarList& keep);

// Variable elimination: condition on the evidence, eliminate all non-query
// variables (given ordering, or min-fill when empty), return the normalized
// query posterior and a cost report. Evidence of probability zero raises
// ZeroMassError.
EliminationResult eliminate(const std::vector<Factor>& factors, const VarList& query,
                            const Assignment& evidence, const VarList& ordering = {});

} // namespace sepnet

#endif
