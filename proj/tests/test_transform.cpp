#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sepnet/inference.hpp"
#include "sepnet/transform.hpp"
#include "test_util.hpp"

using namespace sepnet;
using namespace sepnet::testutil;

namespace {

const Variable X2("X", 2), Y2("Y", 2), Z2("Z", 2);

Factor selector_sum(const SelectorFactorization& sf) {
    Factor prod = Factor::scalar(1.0);
    for (const Factor& g : sf.factors) prod = multiply(prod, g);
    return sum_out(prod, sf.selector);
}

} // namespace

TEST_CASE("one-component factorization reproduces the cpt exactly") {
    SplitMix64 rng(3);
    const Cpt cpt = random_cpt(rng, {X2, Y2}, Z2);
    const Separation sep = separate_n(cpt, {{X2, Y2}});
    REQUIRE(sep.ok());
    const SelectorFactorization sf = to_sum_of_products(*sep.decomposition);
    CHECK(sf.selector.cardinality == 1);
    REQUIRE(sf.factors.size() == 1);
    const Factor back = reorder(selector_sum(sf), cpt.table().scope());
    CHECK(max_abs_diff(back, cpt.table()) < 1e-12);
}

TEST_CASE("hand-checkable mixture: identity copy plus a coin") {
    // gamma = 0.5, P_X = copy of x, P_Y = the constant coin (0.5, 0.5)
    SeparableDecomposition d;
    d.child = Z2;
    d.blocks = {{X2}, {Y2}};
    d.weights = {0.5, 0.5};
    d.components = {Cpt(Z2, {X2}, {1, 0, 0, 1}), Cpt(Z2, {Y2}, {0.5, 0.5, 0.5, 0.5})};
    const SelectorFactorization sf = to_sum_of_products(d);
    const Factor total = selector_sum(sf);
    // at (x=1, y=0): P(z=1) = 0.5 * 1 + 0.5 * 0.5 = 0.75
    CHECK(total.at(Assignment::of({{Z2, 1}, {X2, 1}, {Y2, 0}})) == doctest::Approx(0.75));
    // brute force over all 8 cells
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z) {
                const double want = 0.5 * d.components[0].value(static_cast<std::size_t>(x), z) +
                                    0.5 * d.components[1].value(static_cast<std::size_t>(y), z);
                CHECK(total.at(Assignment::of({{Z2, z}, {X2, x}, {Y2, y}})) ==
                      doctest::Approx(want).epsilon(1e-12));
            }
}

TEST_CASE("eliminating the selector by VE reconstructs the source table") {
    SplitMix64 rng(11);
    const Variable a("A", 2), b("B", 3), c("C", 2), z("Z", 3);
    for (int trial = 0; trial < 20; ++trial) {
        const Cpt cpt = random_mixture(rng, {a, b, c}, z);
        const Separation sep = separate_n(cpt, {{a}, {b}, {c}});
        REQUIRE(sep.ok());
        const SelectorFactorization sf = to_sum_of_products(*sep.decomposition);

        Factor prod = Factor::scalar(1.0);
        for (const Factor& g : sf.factors) prod = multiply(prod, g);
        const Factor back = reorder(sum_out(prod, sf.selector), cpt.table().scope());
        CHECK(max_abs_diff(back, cpt.table()) < 1e-12);
    }
}

TEST_CASE("transform_network: separable node becomes scope-3 factors") {
    SplitMix64 rng(19);
    const Variable p1("P1", 2), p2("P2", 2), p3("P3", 2), p4("P4", 2), z("Z", 2);
    std::vector<Cpt> network;
    for (const Variable& p : {p1, p2, p3, p4}) network.push_back(random_cpt(rng, {}, p));
    network.push_back(random_mixture(rng, {p1, p2, p3, p4}, z));

    const auto factors = transform_network(network, {{"Z", {}}});
    CHECK(factors.size() == 8); // 4 priors + 4 selector factors
    std::size_t selector_factors = 0;
    for (const Factor& f : factors)
        if (contains_var(f.scope(), selector_name("Z"))) {
            ++selector_factors;
            CHECK(f.scope().size() == 3);
        }
    CHECK(selector_factors == 4);

    // empty annotation set passes the tables through unchanged
    const auto plain = transform_network(network, {});
    REQUIRE(plain.size() == network.size());
    for (std::size_t i = 0; i < plain.size(); ++i)
        CHECK(max_abs_diff(plain[i], network[i].table()) == 0.0);
}

TEST_CASE("transform_network propagates non-separability with a witness") {
    std::vector<double> t;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            const int on = (x || y) ? 1 : 0;
            t.push_back(on ? 0.0 : 1.0);
            t.push_back(on ? 1.0 : 0.0);
        }
    const std::vector<Cpt> network{Cpt(Z2, {X2, Y2}, t)};
    CHECK_THROWS_AS(transform_network(network, {{"Z", {}}}), NotSeparableError);
}

TEST_CASE("transformed factor list preserves the joint distribution") {
    SplitMix64 rng(23);
    const Variable p1("P1", 2), p2("P2", 3), z("Z", 2);
    std::vector<Cpt> network;
    for (const Variable& p : {p1, p2}) network.push_back(random_cpt(rng, {}, p));
    network.push_back(random_mixture(rng, {p1, p2}, z));

    Factor original = Factor::scalar(1.0);
    for (const Cpt& c : network) original = multiply(original, c.table());

    Factor transformed = Factor::scalar(1.0);
    for (const Factor& f : transform_network(network, {{"Z", {}}}))
        transformed = multiply(transformed, f);
    transformed = sum_out(transformed, Variable(selector_name("Z"), 2));

    CHECK(max_abs_diff(reorder(transformed, original.scope()), original) < 1e-12);
}

TEST_CASE("posterior marginals agree between the original and transformed network") {
    SplitMix64 rng(29);
    const Variable p1("P1", 2), p2("P2", 2), p3("P3", 3), z("Z", 2), w("W", 2);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Cpt> network;
        for (const Variable& p : {p1, p2, p3}) network.push_back(random_cpt(rng, {}, p));
        network.push_back(random_mixture(rng, {p1, p2, p3}, z));
        network.push_back(random_cpt(rng, {z}, w)); // a child below the mixture node

        std::vector<Factor> original;
        for (const Cpt& c : network) original.push_back(c.table());
        const auto transformed = transform_network(network, {{"Z", {}}});

        const Assignment evidence = Assignment::of({{w, trial % 2}});
        for (const Variable& query : {z, p1, p3}) {
            const auto a = eliminate(original, {query}, evidence);
            const auto b = eliminate(transformed, {query}, evidence);
            CHECK(max_abs_diff(a.posterior, b.posterior) < 1e-9);
        }
    }
}
