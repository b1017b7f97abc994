#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sepnet/separability.hpp"
#include "test_util.hpp"

using namespace sepnet;
using namespace sepnet::testutil;

namespace {

const Variable X2("X", 2), Y2("Y", 2), W2("W", 2), Z2("Z", 2);

// P(z=1 | x,w,y) = (x and not w) or (y and w); parents ordered (X, W, Y).
Cpt xwy_example() {
    std::vector<double> t;
    for (int x = 0; x < 2; ++x)
        for (int w = 0; w < 2; ++w)
            for (int y = 0; y < 2; ++y) {
                const int z1 = (x && !w) || (y && w) ? 1 : 0;
                t.push_back(z1 ? 0.0 : 1.0);
                t.push_back(z1 ? 1.0 : 0.0);
            }
    return Cpt(Z2, {X2, W2, Y2}, std::move(t));
}

Cpt or_gate() {
    std::vector<double> t;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            const int z1 = (x || y) ? 1 : 0;
            t.push_back(z1 ? 0.0 : 1.0);
            t.push_back(z1 ? 1.0 : 0.0);
        }
    return Cpt(Z2, {X2, Y2}, std::move(t));
}

// Noisy-or with zero leak and activation 0.5 per parent.
Cpt noisy_or() {
    std::vector<double> t;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            const double on = 1.0 - std::pow(0.5, x + y);
            t.push_back(1.0 - on);
            t.push_back(on);
        }
    return Cpt(Z2, {X2, Y2}, std::move(t));
}

// Two deterministic copies flattened into one compound child (Z1,Z2) = (x,y).
Cpt figure5_pair() {
    const Variable pair("(Z1*Z2)", 4);
    std::vector<double> t(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) t[static_cast<std::size_t>((x * 2 + y) * 4 + (x * 2 + y))] = 1.0;
    return Cpt(pair, {X2, Y2}, std::move(t));
}

} // namespace

TEST_CASE("xwy slice at w=0 separates with gamma 1 and an identity component") {
    const Cpt sliced = xwy_example().conditioned(Assignment::of({{W2, 0}}));
    const Separation sep = separate_two(sliced, {X2}, {Y2});
    REQUIRE(sep.ok());
    CHECK(sep.decomposition->weights[0] == doctest::Approx(1.0));
    CHECK(sep.decomposition->weights[1] == doctest::Approx(0.0));
    const Cpt& px = sep.decomposition->components[0];
    CHECK(px.value(0, 0) == doctest::Approx(1.0));
    CHECK(px.value(0, 1) == doctest::Approx(0.0));
    CHECK(px.value(1, 0) == doctest::Approx(0.0));
    CHECK(px.value(1, 1) == doctest::Approx(1.0));
    CHECK(sep.decomposition->reconstruction_error(sliced) < 1e-12);
}

TEST_CASE("OR gate is not separable and carries an additivity witness") {
    const Cpt gate = or_gate();
    const Separation sep = separate_two(gate, {X2}, {Y2});
    REQUIRE(!sep.ok());
    REQUIRE(sep.witness.has_value());
    // lowest-index tie-breaking lands on the (x=1, y=0) cell at z=0
    CHECK(sep.witness->parents.value_of("X") == 1);
    CHECK(sep.witness->parents.value_of("Y") == 0);
    CHECK(std::fabs(sep.witness->table_value - sep.witness->additive_value) ==
          doctest::Approx(1.0));
    // additivity anchored at (0,0) would demand P(z=1|1,1) = 0 + 1 + 1 = 2
    const double demanded = gate.value(2, 1) + gate.value(1, 1) - gate.value(0, 1);
    CHECK(demanded == doctest::Approx(2.0));
    CHECK(gate.value(3, 1) == doctest::Approx(1.0));
}

TEST_CASE("noisy-or lacks the sufficiency property") {
    CHECK(!separate_two(noisy_or(), {X2}, {Y2}).ok());
    CHECK(!sufficiency_oracle(noisy_or(), {{X2}, {Y2}}));
}

TEST_CASE("construct-then-decompose round trip, gamma not required to match") {
    SplitMix64 rng(42);
    const Variable x3("X", 3), z("Z", 2);
    for (int trial = 0; trial < 25; ++trial) {
        const Cpt cpt = random_mixture(rng, {x3, Y2}, z);
        const Separation sep = separate_two(cpt, {x3}, {Y2});
        REQUIRE(sep.ok());
        CHECK(sep.decomposition->reconstruction_error(cpt) < 1e-9);
        sep.decomposition->validate(1e-9, 1e-9, &cpt);
    }
}

TEST_CASE("single block: weight one, component equals the cpt") {
    SplitMix64 rng(8);
    const Cpt cpt = random_cpt(rng, {X2, Y2}, Z2);
    const Separation sep = separate_n(cpt, {{X2, Y2}});
    REQUIRE(sep.ok());
    CHECK(sep.decomposition->weights == std::vector<double>{1.0});
    CHECK(max_abs_diff(sep.decomposition->components[0].table(), cpt.table()) < 1e-12);
}

TEST_CASE("three deterministic copies mix back together") {
    const Variable a("A", 2), b("B", 2), c("C", 2), z("Z", 2);
    const VarList parents{a, b, c};
    std::vector<double> t(16, 0.0);
    for (std::size_t x = 0; x < 8; ++x) {
        const auto d = digits_of(x, parents);
        for (int zv = 0; zv < 2; ++zv) {
            double p = 0.0;
            for (int i = 0; i < 3; ++i) p += (d[static_cast<std::size_t>(i)] == zv) / 3.0;
            t[x * 2 + static_cast<std::size_t>(zv)] = p;
        }
    }
    const Cpt cpt(z, parents, t);
    const Separation sep = separate_n(cpt, {{a}, {b}, {c}});
    REQUIRE(sep.ok());
    CHECK(sep.decomposition->reconstruction_error(cpt) < 1e-9);
    CHECK(sufficiency_oracle(cpt, {{a}, {b}, {c}}));
}

TEST_CASE("degenerate child: parent-independent table, uniform weights, flagged") {
    std::vector<double> t;
    for (int i = 0; i < 4; ++i) {
        t.push_back(0.3);
        t.push_back(0.7);
    }
    const Cpt cpt(Z2, {X2, Y2}, t);
    const Separation sep = separate_two(cpt, {X2}, {Y2});
    REQUIRE(sep.ok());
    CHECK(sep.degenerate_child);
    CHECK(sep.decomposition->weights[0] == doctest::Approx(0.5));
    CHECK(sep.decomposition->reconstruction_error(cpt) < 1e-12);
}

TEST_CASE("table constant in one block puts all weight on the other") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        // replicate a P(Z|X) across Y
        const Cpt base = random_cpt(rng, {X2}, Z2);
        std::vector<double> t;
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                (void)y;
                t.push_back(base.value(static_cast<std::size_t>(x), 0));
                t.push_back(base.value(static_cast<std::size_t>(x), 1));
            }
        const Separation sep = separate_two(Cpt(Z2, {X2, Y2}, t), {X2}, {Y2});
        REQUIRE(sep.ok());
        CHECK(sep.decomposition->weights[0] == doctest::Approx(1.0));
    }
}

// A separable table whose block effect misses z1 entirely: the natural weight
// for the X block is zero although X matters, so the constructor must fall
// back to a feasible allocation.
TEST_CASE("natural weights infeasible: fallback still returns a valid mixture") {
    const Variable z3("Z", 3);
    const std::vector<double> base{0.2, 0.4, 0.4};
    const std::vector<double> dx{0.0, 0.1, -0.1};  // effect of X, zero at z=0
    const std::vector<double> dy{0.5, -0.2, -0.3}; // effect of Y
    std::vector<double> t;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int zv = 0; zv < 3; ++zv)
                t.push_back(base[static_cast<std::size_t>(zv)] +
                            x * dx[static_cast<std::size_t>(zv)] +
                            y * dy[static_cast<std::size_t>(zv)]);
    const Cpt cpt(z3, {X2, Y2}, t);
    REQUIRE(sufficiency_oracle(cpt, {{X2}, {Y2}}));
    const Separation sep = separate_two(cpt, {X2}, {Y2});
    REQUIRE(sep.ok());
    sep.decomposition->validate(1e-9, 1e-9, &cpt);
    CHECK(sep.decomposition->weights[0] > 0.0);
}

TEST_CASE("conditional separability of the xwy example") {
    const Cpt cpt = xwy_example();
    const ConditionalSeparation sep = conditional_separate(cpt, {X2, W2}, {W2, Y2}, {W2});
    REQUIRE(sep.ok());
    CHECK(sep.decomposition->gamma[0] == doctest::Approx(1.0)); // w=0: z copies x
    CHECK(sep.decomposition->gamma[1] == doctest::Approx(0.0)); // w=1: z copies y

    // overlapping residual blocks are a precondition violation
    CHECK_THROWS_AS(conditional_separate(cpt, {X2, W2}, {W2, Y2}, {}), FactorError);
}

TEST_CASE("conditional separation given the empty set reduces to separate_two") {
    SplitMix64 rng(23);
    const Cpt cpt = random_mixture(rng, {X2, Y2}, Z2);
    const ConditionalSeparation cond = conditional_separate(cpt, {X2}, {Y2}, {});
    REQUIRE(cond.ok());
    REQUIRE(cond.decomposition->entries.size() == 1);
    const Separation two = separate_two(cpt, {X2}, {Y2});
    REQUIRE(two.ok());
    CHECK(cond.decomposition->gamma[0] == doctest::Approx(two.decomposition->weights[0]));
    CHECK(max_abs_diff(cond.decomposition->entries[0].components[0].table(),
                       two.decomposition->components[0].table()) < 1e-12);
}

TEST_CASE("enlarging the conditioning set preserves conditional separability") {
    SplitMix64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        // per-w mixture: conditionally separable given {W} by construction
        std::vector<Cpt> per_w;
        for (int w = 0; w < 2; ++w) per_w.push_back(random_mixture(rng, {X2, Y2}, Z2));
        std::vector<double> t;
        for (int x = 0; x < 2; ++x)
            for (int w = 0; w < 2; ++w)
                for (int y = 0; y < 2; ++y)
                    for (int zv = 0; zv < 2; ++zv)
                        t.push_back(per_w[static_cast<std::size_t>(w)].value(
                            static_cast<std::size_t>(x * 2 + y), zv));
        const Cpt cpt(Z2, {X2, W2, Y2}, t);
        CHECK(conditional_separate(cpt, {X2, W2}, {W2, Y2}, {W2}).ok());
        CHECK(conditional_separate(cpt, {X2, W2}, {W2, Y2}, {W2, X2}).ok());
        CHECK(conditional_separate(cpt, {X2, W2}, {W2, Y2}, {W2, Y2}).ok());
        CHECK(conditional_separate(cpt, {X2, W2}, {W2, Y2}, {X2, W2, Y2}).ok());
    }
}

TEST_CASE("tree separation: single leaf wraps the cpt unchanged") {
    SplitMix64 rng(31);
    const Cpt cpt = random_cpt(rng, {X2, Y2}, Z2);
    const TreeSeparation sep = tree_separate(cpt, TreeRepresentation::leaf({X2, Y2}));
    REQUIRE(sep.ok());
    CHECK(sep.decomposition->is_leaf());
    CHECK(max_abs_diff(sep.decomposition->leaf_cpt->table(), cpt.table()) < 1e-15);
}

TEST_CASE("tree separation of a weather-style table, validated against the oracle") {
    SplitMix64 rng(37);
    const Variable w3("W", 3);
    for (int trial = 0; trial < 10; ++trial) {
        // P(z | w, x, y) = gamma^w P_x(z|x) + (1 - gamma^w) P_y(z|y)
        const Cpt px = random_cpt(rng, {X2}, Z2), py = random_cpt(rng, {Y2}, Z2);
        std::vector<double> gw;
        for (int w = 0; w < 3; ++w) gw.push_back(rng.uniform());
        std::vector<double> t;
        for (int w = 0; w < 3; ++w)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    for (int zv = 0; zv < 2; ++zv)
                        t.push_back(gw[static_cast<std::size_t>(w)] *
                                        px.value(static_cast<std::size_t>(x), zv) +
                                    (1 - gw[static_cast<std::size_t>(w)]) *
                                        py.value(static_cast<std::size_t>(y), zv));
        const Cpt cpt(Z2, {w3, X2, Y2}, t);
        const TreeRepresentation tree = TreeRepresentation::flat({{w3, X2}, {w3, Y2}});
        const TreeSeparation sep = tree_separate(cpt, tree);
        REQUIRE(sep.ok());
        CHECK(sep.decomposition->reconstruction_error(cpt) < 1e-9);
        CHECK(sufficiency_oracle(cpt, tree.leaf_subsets()));

        // singleton blocks must agree with the oracle as well
        const bool plain = separate_n(cpt, {{w3}, {X2}, {Y2}}).ok();
        CHECK(plain == sufficiency_oracle(cpt, {{w3}, {X2}, {Y2}}));
    }
}

TEST_CASE("figure-5 pair table: sufficient per child, not for the pair") {
    const Cpt pair = figure5_pair();
    CHECK(!sufficiency_oracle(pair, {{X2}, {Y2}}));
    CHECK(!tree_separate(pair, TreeRepresentation::flat({{X2}, {Y2}})).ok());

    // each child alone is a copy of one parent
    std::vector<double> t;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            (void)y;
            t.push_back(x == 0 ? 1.0 : 0.0);
            t.push_back(x == 1 ? 1.0 : 0.0);
        }
    const Cpt z1(Variable("Z1", 2), {X2, Y2}, t);
    CHECK(sufficiency_oracle(z1, {{X2}, {Y2}}));
}

TEST_CASE("xwy example: the overlapping doubletons are sufficient") {
    CHECK(sufficiency_oracle(xwy_example(), {{X2, W2}, {W2, Y2}}));
    CHECK(!sufficiency_oracle(xwy_example(), {{X2}, {W2}, {Y2}}));
}

TEST_CASE("oracle agreement on random instances") {
    SplitMix64 rng(43);
    const Variable z3("Z", 3);
    int separable_seen = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Cpt cpt =
            trial % 2 == 0 ? random_mixture(rng, {X2, Y2}, z3) : random_cpt(rng, {X2, Y2}, z3);
        const bool constructive = separate_two(cpt, {X2}, {Y2}).ok();
        const bool oracle = sufficiency_oracle(cpt, {{X2}, {Y2}});
        CHECK(constructive == oracle);
        separable_seen += constructive;
    }
    CHECK(separable_seen >= 20); // every constructed mixture must pass
}

TEST_CASE("zero synergy: the quadrilateral identity characterizes separability") {
    SplitMix64 rng(47);
    const Variable x3("X", 3);
    auto quad_ok = [](const Cpt& cpt) {
        const int cx = cpt.parents()[0].cardinality, cy = cpt.parents()[1].cardinality;
        for (int i = 0; i < cx; ++i)
            for (int k = 0; k < cx; ++k)
                for (int j = 0; j < cy; ++j)
                    for (int l = 0; l < cy; ++l)
                        for (int zv = 0; zv < cpt.child().cardinality; ++zv) {
                            const auto idx = [&](int aa, int bb) {
                                return static_cast<std::size_t>(aa * cy + bb);
                            };
                            if (std::fabs(cpt.value(idx(i, j), zv) + cpt.value(idx(k, l), zv) -
                                          cpt.value(idx(i, l), zv) - cpt.value(idx(k, j), zv)) >
                                1e-9)
                                return false;
                        }
        return true;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const Cpt mixture = random_mixture(rng, {x3, Y2}, Z2);
        CHECK(quad_ok(mixture));
        CHECK(quad_ok(mixture) == separate_two(mixture, {x3}, {Y2}).ok());
        const Cpt free = random_cpt(rng, {x3, Y2}, Z2);
        CHECK(quad_ok(free) == separate_two(free, {x3}, {Y2}).ok());
    }
    CHECK(!quad_ok(or_gate()));
}

TEST_CASE("apply_decomposition: point mass, one-sided weight, brute-force expectation") {
    SplitMix64 rng(53);
    const Variable x3("X", 3), z3("Z", 3);
    const Cpt cpt = random_mixture(rng, {x3, Y2}, z3);
    const Separation sep = separate_two(cpt, {x3}, {Y2});
    REQUIRE(sep.ok());

    // point-mass marginals collapse the mixture to the original row
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 2; ++y) {
            MarginalSet ms;
            ms.subsets = {{x3}, {Y2}};
            std::vector<double> qx(3, 0.0), qy(2, 0.0);
            qx[static_cast<std::size_t>(x)] = 1.0;
            qy[static_cast<std::size_t>(y)] = 1.0;
            ms.marginals = {Factor({x3}, qx), Factor({Y2}, qy)};
            const Factor out = apply_decomposition(*sep.decomposition, ms);
            const std::size_t row = static_cast<std::size_t>(x * 2 + y);
            for (int zv = 0; zv < 3; ++zv)
                CHECK(out.values()[static_cast<std::size_t>(zv)] ==
                      doctest::Approx(cpt.value(row, zv)).epsilon(1e-9));
        }

    // random product marginals match the brute-force expectation
    for (int trial = 0; trial < 10; ++trial) {
        const auto qx = rng.distribution(3), qy = rng.distribution(2);
        MarginalSet ms;
        ms.subsets = {{x3}, {Y2}};
        ms.marginals = {Factor({x3}, qx), Factor({Y2}, qy)};
        const Factor out = apply_decomposition(*sep.decomposition, ms);

        std::vector<double> joint(6);
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 2; ++y)
                joint[static_cast<std::size_t>(x * 2 + y)] =
                    qx[static_cast<std::size_t>(x)] * qy[static_cast<std::size_t>(y)];
        CHECK(max_abs(out.values(), brute_phi(cpt, joint)) < 1e-9);
    }

    // a gamma = 1 decomposition ignores the other block entirely
    const Cpt sliced = xwy_example().conditioned(Assignment::of({{W2, 0}}));
    const Separation one = separate_two(sliced, {X2}, {Y2});
    REQUIRE(one.ok());
    MarginalSet ms;
    ms.subsets = {{X2}, {Y2}};
    ms.marginals = {Factor({X2}, {0.25, 0.75}), Factor({Y2}, {0.9, 0.1})};
    const Factor a = apply_decomposition(*one.decomposition, ms);
    ms.marginals[1] = Factor({Y2}, {0.1, 0.9});
    const Factor b = apply_decomposition(*one.decomposition, ms);
    CHECK(max_abs_diff(a, b) < 1e-15);
}

TEST_CASE("Phi is invariant across joints with equal subset marginals") {
    SplitMix64 rng(59);
    for (int trial = 0; trial < 10; ++trial) {
        const Cpt cpt = random_mixture(rng, {X2, Y2}, Z2);
        std::vector<double> q1 = rng.distribution(4);
        // move mass around a rectangle; both marginals stay fixed
        const double d = 0.2 * std::min(std::min(q1[0], q1[3]), std::min(1 - q1[1], 1 - q1[2]));
        std::vector<double> q2 = q1;
        q2[0] -= d;
        q2[1] += d;
        q2[2] += d;
        q2[3] -= d;
        CHECK(max_abs(brute_marginal(q1, {X2, Y2}, {X2}), brute_marginal(q2, {X2, Y2}, {X2})) <
              1e-12);
        CHECK(max_abs(brute_phi(cpt, q1), brute_phi(cpt, q2)) < 1e-9);
    }
}

TEST_CASE("oracle cap raises") {
    SplitMix64 rng(61);
    const Cpt cpt = random_cpt(rng, {X2, Y2}, Z2);
    OracleOptions opts;
    opts.parent_space_cap = 2;
    CHECK_THROWS_AS(sufficiency_oracle(cpt, {{X2}, {Y2}}, opts), CapExceededError);
}

TEST_CASE("null space basis of a small stacked-marginal map") {
    // M = [[1,1,0],[0,0,1]]: null space is spanned by (1,-1,0)
    const auto basis = detail::null_space_basis({{1, 1, 0}, {0, 0, 1}}, 3, 1e-10);
    REQUIRE(basis.size() == 1);
    CHECK(basis[0][0] == doctest::Approx(-basis[0][1]));
    CHECK(basis[0][2] == doctest::Approx(0.0));
}

TEST_CASE("tree failure reports the path and conditioning assignment") {
    const Variable a("A", 2), b("B", 2), z("Z", 2);
    // P(z | w, a, b): separable at w=0, an OR gate at w=1
    std::vector<double> t;
    for (int w = 0; w < 2; ++w)
        for (int av = 0; av < 2; ++av)
            for (int bv = 0; bv < 2; ++bv) {
                const double p1 = w == 0 ? 0.5 * av + 0.5 * bv : ((av || bv) ? 1.0 : 0.0);
                t.push_back(1 - p1);
                t.push_back(p1);
            }
    const Cpt cpt(z, {W2, a, b}, t);
    const TreeSeparation sep =
        tree_separate(cpt, TreeRepresentation::flat({{W2, a}, {W2, b}}));
    REQUIRE(!sep.ok());
    REQUIRE(sep.failed_at.has_value());
    CHECK(sep.failed_at->value_of("W") == 1);
    CHECK(sep.witness.has_value());
}
