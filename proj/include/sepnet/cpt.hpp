#ifndef SEPNET_CPT_HPP
#define SEPNET_CPT_HPP

#include <span>
#include <vector>

#include "sepnet/factor.hpp"

namespace sepnet {

constexpr double kDefaultEpsNorm = 1e-9;
constexpr double kDefaultEpsConsistency = 1e-9;
constexpr double kDefaultEpsSep = 1e-9;

// Conditional probability table P(child | parents). The table's scope is the
// parents followed by the child, so each parent assignment owns a contiguous
// row over the child values.
class Cpt {
  public:
    Cpt() = default;
    Cpt(Variable child, VarList parents, std::vector<double> table,
        double eps_norm = kDefaultEpsNorm);

    const Variable& child() const { return child_; }
    const VarList& parents() const { return parents_; }
    const Factor& table() const { return table_; }

    std::size_t parent_space() const { return table_.size() / static_cast<std::size_t>(child_.cardinality); }

    // Row of child values for the parent assignment with the given linear index.
    std::span<const double> row(std::size_t parent_index) const {
        const auto zc = static_cast<std::size_t>(child_.cardinality);
        return {table_.values().data() + parent_index * zc, zc};
    }

    double value(std::size_t parent_index, int z) const {
        return table_.values()[parent_index * static_cast<std::size_t>(child_.cardinality) +
                               static_cast<std::size_t>(z)];
    }

    // Slice the table at an assignment of some parents.
    Cpt conditioned(const Assignment& e) const;

    void validate(double eps_norm = kDefaultEpsNorm) const;

  private:
    Variable child_;
    VarList parents_;
    Factor table_;
};

// One normalized marginal Factor per family subset. Overlapping subsets must
// agree on shared-variable marginals; Demonstrate-mode filtering deliberately
// violates that, so the check is a method, not a construction invariant.
struct MarginalSet {
    std::vector<VarList> subsets;
    std::vector<Factor> marginals;

    std::size_t size() const { return subsets.size(); }

    // Marginal over `block`, read from the lowest-indexed subset containing
    // every block variable. With check_others, asserts agreement (within eps)
    // of every other containing subset.
    Factor marginal_for(const VarList& block, bool check_others = false,
                        double eps = kDefaultEpsConsistency) const;

    // Verifies normalization of each marginal and cross-subset agreement on
    // shared variables. Each subset is marginalized at most once per distinct
    // shared set, so the cost stays linear in the family size for families
    // that share one common set (e.g. a root variable).
    void check(double eps_norm = kDefaultEpsNorm,
               double eps_consistency = kDefaultEpsConsistency) const;
};

} // namespace sepnet

#endif
