#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "sepnet/inference.hpp"
#include "sepnet/transform.hpp"
#include "test_util.hpp"

using namespace sepnet;
using namespace sepnet::testutil;

namespace {

const Variable X2("X", 2), Y2("Y", 2), Z2("Z", 2);

Factor copy_table(const Variable& from, const Variable& to) {
    std::vector<double> t(static_cast<std::size_t>(from.cardinality * to.cardinality), 0.0);
    for (int i = 0; i < from.cardinality; ++i)
        t[static_cast<std::size_t>(i * to.cardinality + i)] = 1.0;
    return Factor({from, to}, t);
}

} // namespace

TEST_CASE("single cpt with uniform priors yields the mixture marginal") {
    SplitMix64 rng(2);
    const Cpt cpt = random_mixture(rng, {X2, Y2}, Z2);
    const std::vector<Factor> factors{cpt.table(), Factor({X2}, {0.5, 0.5}),
                                      Factor({Y2}, {0.5, 0.5})};
    const auto res = eliminate(factors, {Z2}, Assignment());

    std::vector<double> joint(4, 0.25);
    CHECK(max_abs(res.posterior.values(), brute_phi(cpt, joint)) < 1e-12);
}

TEST_CASE("deterministic chain pushes evidence through") {
    const std::vector<Factor> factors{Factor({X2}, {0.5, 0.5}), copy_table(X2, Y2),
                                      copy_table(Y2, Z2)};
    const auto res = eliminate(factors, {Z2}, Assignment::of({{X2, 1}}));
    CHECK(res.posterior.values()[0] == doctest::Approx(0.0));
    CHECK(res.posterior.values()[1] == doctest::Approx(1.0));
    CHECK(res.mass == doctest::Approx(0.5)); // P(x=1)

    CHECK_THROWS_AS(eliminate({copy_table(X2, Y2), Factor({X2}, {1, 0})}, {Y2},
                              Assignment::of({{X2, 1}})),
                    ZeroMassError);
}

TEST_CASE("result does not depend on the elimination ordering") {
    SplitMix64 rng(7);
    const Variable a("A", 2), b("B", 3), c("C", 2), d("D", 2);
    std::vector<Cpt> network;
    network.push_back(random_cpt(rng, {}, a));
    network.push_back(random_cpt(rng, {a}, b));
    network.push_back(random_cpt(rng, {a, b}, c));
    network.push_back(random_cpt(rng, {c}, d));
    std::vector<Factor> factors;
    for (const Cpt& t : network) factors.push_back(t.table());

    const auto ref = eliminate(factors, {d}, Assignment::of({{a, 1}}));
    VarList others{b, c};
    std::sort(others.begin(), others.end());
    do {
        const auto res = eliminate(factors, {d}, Assignment::of({{a, 1}}), others);
        CHECK(max_abs_diff(res.posterior, ref.posterior) < 1e-9);
        CHECK(res.mass == doctest::Approx(ref.mass));
    } while (std::next_permutation(others.begin(), others.end()));
}

TEST_CASE("min-fill on a chain eliminates from the ends, scope stays 2") {
    const Variable a("A", 2), b("B", 2), c("C", 2), d("D", 2);
    const std::vector<Factor> factors{copy_table(a, b), copy_table(b, c), copy_table(c, d)};
    const auto res = eliminate(factors, {d}, Assignment());
    CHECK(res.report.max_intermediate_scope() == 2);
}

TEST_CASE("selector graph keeps every intermediate factor at scope 3") {
    SplitMix64 rng(13);
    for (int n = 3; n <= 8; ++n) {
        VarList parents;
        for (int i = 0; i < n; ++i) parents.emplace_back("P" + std::to_string(i), 2);
        const Cpt cpt = random_mixture(rng, parents, Z2);
        const Separation sep = separate_n(
            cpt, [&] {
                std::vector<VarList> blocks;
                for (const Variable& p : parents) blocks.push_back({p});
                return blocks;
            }());
        REQUIRE(sep.ok());
        const SelectorFactorization sf = to_sum_of_products(*sep.decomposition);
        const auto res = eliminate(sf.factors, {Z2}, Assignment());
        CHECK(res.report.max_intermediate_scope() == 3);
    }
}

TEST_CASE("an undecomposed clique forces scope n+1") {
    SplitMix64 rng(17);
    for (int n = 3; n <= 6; ++n) {
        VarList parents;
        for (int i = 0; i < n; ++i) parents.emplace_back("P" + std::to_string(i), 2);
        std::vector<Factor> factors{random_cpt(rng, parents, Z2).table()};
        for (const Variable& p : parents) factors.push_back(random_cpt(rng, {}, p).table());
        const auto res = eliminate(factors, {Z2}, Assignment());
        CHECK(res.report.max_intermediate_scope() == n + 1);
    }
}

TEST_CASE("mass is conserved: product of factors equals the empty-query mass") {
    SplitMix64 rng(19);
    const Variable a("A", 2), b("B", 3);
    const std::vector<Factor> factors{Factor({a}, {0.4, 0.8}), Factor({a, b}, rng.distribution(6))};
    Factor prod = Factor::scalar(1.0);
    for (const Factor& f : factors) prod = multiply(prod, f);
    const auto res = eliminate(factors, {}, Assignment());
    CHECK(res.mass == doctest::Approx(prod.total_mass()));
    CHECK(res.posterior.values() == std::vector<double>{1.0});
}

TEST_CASE("query and evidence preconditions") {
    const std::vector<Factor> factors{Factor({X2}, {0.5, 0.5})};
    CHECK_THROWS_AS(eliminate(factors, {Y2}, Assignment()), FactorError);
    CHECK_THROWS_AS(eliminate(factors, {X2}, Assignment::of({{Y2, 0}})), FactorError);
    CHECK_THROWS_AS(eliminate(factors, {X2}, Assignment::of({{X2, 0}})), FactorError);
}
