#include "sepnet/cpt.hpp"

#include <cmath>
#include <map>

namespace sepnet {

Cpt::Cpt(Variable child, VarList parents, std::vector<double> table, double eps_norm)
    : child_(std::move(child)), parents_(std::move(parents)) {
    VarList scope = parents_;
    scope.push_back(child_);
    table_ = Factor(std::move(scope), std::move(table));
    validate(eps_norm);
}

void Cpt::validate(double eps_norm) const {
    table_.throw_if_negative("cpt");
    const auto zc = static_cast<std::size_t>(child_.cardinality);
    for (std::size_t r = 0; r < parent_space(); ++r) {
        double s = 0.0;
        for (std::size_t z = 0; z < zc; ++z) s += table_.values()[r * zc + z];
        if (std::fabs(s - 1.0) > eps_norm)
            throw FactorError("cpt for '" + child_.name + "': row " + std::to_string(r) +
                              " sums to " + std::to_string(s));
    }
}

Cpt Cpt::conditioned(const Assignment& e) const {
    for (const auto& [v, val] : e.entries())
        if (!contains_var(parents_, v.name))
            throw FactorError("cpt condition: '" + v.name + "' is not a parent of '" + child_.name + "'");
    const Factor sliced = condition(table_, e);
    VarList rest = sliced.scope();
    rest.pop_back(); // child stays last
    return Cpt(child_, std::move(rest), sliced.values());
}

Factor MarginalSet::marginal_for(const VarList& block, bool check_others, double eps) const {
    std::size_t found = subsets.size();
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        if (!contains_all(subsets[i], block)) continue;
        if (found == subsets.size()) {
            found = i;
            if (!check_others) break;
        }
    }
    if (found == subsets.size())
        throw FactorError("no family subset contains the block (" + var_names(block) + ")");
    Factor m = marginalize_to(marginals[found], block);
    if (check_others) {
        for (std::size_t i = found + 1; i < subsets.size(); ++i) {
            if (!contains_all(subsets[i], block)) continue;
            const double d = max_abs_diff(m, marginalize_to(marginals[i], block));
            if (d > eps)
                throw FactorError("subset marginals disagree on (" + var_names(block) + ") by " +
                                  std::to_string(d));
        }
    }
    return m;
}

void MarginalSet::check(double eps_norm, double eps_consistency) const {
    if (subsets.size() != marginals.size()) throw FactorError("marginal set: subsets/marginals size mismatch");
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        if (!same_var_set(marginals[i].scope(), subsets[i]))
            throw FactorError("marginal " + std::to_string(i) + " scope does not match its subset");
        marginals[i].throw_if_negative("marginal set");
        if (std::fabs(marginals[i].total_mass() - 1.0) > eps_norm)
            throw FactorError("marginal over (" + var_names(subsets[i]) + ") is not normalized");
    }

    // Group overlapping pairs by their shared variable set so each subset is
    // reduced once per distinct shared set.
    std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < subsets.size(); ++i)
        for (std::size_t j = i + 1; j < subsets.size(); ++j) {
            VarList shared = intersect_vars(subsets[i], subsets[j]);
            if (shared.empty()) continue;
            std::vector<std::string> key;
            for (const Variable& v : shared) key.push_back(v.name);
            std::sort(key.begin(), key.end());
            auto& members = groups[key];
            if (std::find(members.begin(), members.end(), i) == members.end()) members.push_back(i);
            if (std::find(members.begin(), members.end(), j) == members.end()) members.push_back(j);
        }

    for (const auto& [key, members] : groups) {
        VarList shared;
        for (const std::string& name : key) {
            auto pos = find_var(subsets[members[0]], name);
            shared.push_back(subsets[members[0]][*pos]);
        }
        Factor ref = marginalize_to(marginals[members[0]], shared);
        for (std::size_t k = 1; k < members.size(); ++k) {
            const double d = max_abs_diff(ref, marginalize_to(marginals[members[k]], shared));
            if (d > eps_consistency)
                throw FactorError("subset marginals disagree on (" + var_names(shared) + ") by " +
                                  std::to_string(d));
        }
    }
}

} // namespace sepnet
