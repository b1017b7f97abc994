#ifndef SEPNET_TRANSFORM_HPP
#define SEPNET_TRANSFORM_HPP

#include <string>
#include <vector>

#include "sepnet/separability.hpp"

namespace sepnet {

// Sum-of-products form of a separable CPT: an explicit selector variable I
// with one value per mixture component, and factors g_i over (I, Z, X_i) with
// g_i(j, z, x_i) = weight_i * P_i(z | x_i) when j = i and 1 otherwise.
// Summing I out of the product of the g_i reproduces the CPT.
struct SelectorFactorization {
    Variable selector;
    std::vector<Factor> factors;
};

// Deterministic selector name for a decomposed node.
std::string selector_name(const std::string& child_name);

SelectorFactorization to_sum_of_products(const SeparableDecomposition& d);

// Raised by transform_network when an annotated node is not separable.
class NotSeparableError : public FactorError {
  public:
    NotSeparableError(const std::string& what, std::string node, AdditivityWitness witness)
        : FactorError(what), node(std::move(node)), witness(std::move(witness)) {}

    std::string node;
    AdditivityWitness witness;
};

struct NodeAnnotation {
    std::string node;                 // child variable to decompose
    std::vector<VarList> blocks;      // empty = one block per parent
};

// Replace each annotated CPT by its selector factorization (fresh selector
// per node); unannotated CPTs pass through as single factors.
std::vector<Factor> transform_network(const std::vector<Cpt>& network,
                                      const std::vector<NodeAnnotation>& annotations,
                                      const SeparationOptions& opts = {});

} // namespace sepnet

#endif
