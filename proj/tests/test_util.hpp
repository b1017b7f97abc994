#ifndef SEPNET_TEST_UTIL_HPP
#define SEPNET_TEST_UTIL_HPP

// Test-side helpers, including brute-force reference computations that stay
// independent of the library's factor algebra.

#include <cmath>
#include <vector>

#include "sepnet/cpt.hpp"
#include "sepnet/rng.hpp"

namespace sepnet::testutil {

inline std::size_t space(const VarList& vars) {
    std::size_t n = 1;
    for (const Variable& v : vars) n *= static_cast<std::size_t>(v.cardinality);
    return n;
}

inline std::vector<int> digits_of(std::size_t idx, const VarList& vars) {
    std::vector<int> d(vars.size());
    for (std::size_t i = vars.size(); i-- > 0;) {
        d[i] = static_cast<int>(idx % static_cast<std::size_t>(vars[i].cardinality));
        idx /= static_cast<std::size_t>(vars[i].cardinality);
    }
    return d;
}

inline Assignment assignment_at(std::size_t idx, const VarList& vars) {
    const auto d = digits_of(idx, vars);
    Assignment a;
    for (std::size_t i = 0; i < vars.size(); ++i) a.set(vars[i], d[i]);
    return a;
}

// Phi(q) = sum_x q(x) P(Z | x), computed by direct enumeration.
inline std::vector<double> brute_phi(const Cpt& cpt, const std::vector<double>& joint) {
    const auto zc = static_cast<std::size_t>(cpt.child().cardinality);
    std::vector<double> out(zc, 0.0);
    for (std::size_t x = 0; x < cpt.parent_space(); ++x)
        for (std::size_t z = 0; z < zc; ++z) out[z] += joint[x] * cpt.value(x, static_cast<int>(z));
    return out;
}

// Marginal of a joint over `vars` onto the subset, by direct enumeration.
inline std::vector<double> brute_marginal(const std::vector<double>& joint, const VarList& vars,
                                          const VarList& subset) {
    std::vector<double> out(space(subset), 0.0);
    for (std::size_t x = 0; x < joint.size(); ++x) {
        const auto d = digits_of(x, vars);
        std::size_t a = 0;
        for (const Variable& s : subset) {
            std::size_t pos = 0;
            while (vars[pos].name != s.name) ++pos;
            a = a * static_cast<std::size_t>(s.cardinality) + static_cast<std::size_t>(d[pos]);
        }
        out[a] += joint[x];
    }
    return out;
}

inline Cpt random_cpt(SplitMix64& rng, const VarList& parents, const Variable& child) {
    std::vector<double> table;
    for (std::size_t r = 0; r < space(parents); ++r) {
        const auto row = rng.distribution(child.cardinality, 0.01);
        table.insert(table.end(), row.begin(), row.end());
    }
    return Cpt(child, parents, std::move(table));
}

// Explicit mixture over single-variable conditionals: P(z|x1..xn) =
// sum_i gamma_i P_i(z|x_i), built cell by cell.
inline Cpt random_mixture(SplitMix64& rng, const VarList& parents, const Variable& child) {
    const auto gamma = rng.distribution(static_cast<int>(parents.size()));
    std::vector<std::vector<double>> comps;
    for (const Variable& p : parents) {
        std::vector<double> t;
        for (int x = 0; x < p.cardinality; ++x) {
            const auto row = rng.distribution(child.cardinality, 0.01);
            t.insert(t.end(), row.begin(), row.end());
        }
        comps.push_back(std::move(t));
    }
    const auto zc = static_cast<std::size_t>(child.cardinality);
    std::vector<double> table(space(parents) * zc, 0.0);
    for (std::size_t x = 0; x < space(parents); ++x) {
        const auto d = digits_of(x, parents);
        for (std::size_t z = 0; z < zc; ++z)
            for (std::size_t i = 0; i < parents.size(); ++i)
                table[x * zc + z] +=
                    gamma[i] * comps[i][static_cast<std::size_t>(d[i]) * zc + z];
    }
    return Cpt(child, parents, std::move(table));
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

} // namespace sepnet::testutil

#endif
