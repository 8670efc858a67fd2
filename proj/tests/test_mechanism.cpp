#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csbp/mechanism.hpp"

using namespace csbp;

TEST_CASE("psi of the closed-form mechanisms") {
    CHECK(psi(QuadraticMech{1.0}, 2.0) == doctest::Approx(4.0));
    CHECK(psi(QuadraticMech{0.5}, 2.0) == doctest::Approx(2.0));
    CHECK(psi(LogisticMech{}, 3.0) == doctest::Approx(6.0));
    CHECK(psi(LinearMech{2.0}, 3.0) == doctest::Approx(6.0));
    CHECK(psi(ConstantMech{0.7}, 5.0) == doctest::Approx(-0.7));
    // b e^{-u} + d e^{u} - (b + d) vanishes at u = ln(b/d)
    CHECK(psi(BirthDeathMech{2.0, 1.0}, std::log(2.0)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(psi(QuadraticMech{1.0}, -1.0), std::domain_error);
}

TEST_CASE("triplet psi agrees with the tagged forms") {
    // pure Gaussian: sigma^2 u^2 / 2
    LevyTriplet gauss{0.0, 2.0, {}, 0.0};
    CHECK(psi(gauss, 3.0) == doctest::Approx(18.0));
    // killing atom: constant -q
    LevyTriplet killed{0.0, 0.0, {{std::numeric_limits<double>::infinity(), 0.7}}, 0.0};
    CHECK(psi(killed, 5.0) == doctest::Approx(-0.7));
    // unit up/down atoms vs the birth-death form
    LevyTriplet bd{0.0, 0.0, {{1.0, 2.0}, {-1.0, 1.0}}, 0.0};
    for (double l = 0.0; l <= 10.0; l += 0.25)
        CHECK(psi(bd, l) == doctest::Approx(psi(BirthDeathMech{2.0, 1.0}, l)).epsilon(1e-13));
    // drift: -a lambda
    LevyTriplet drifted{3.0, 0.0, {}, 0.0};
    CHECK(psi(drifted, 2.0) == doctest::Approx(-6.0));
    // small atom r < 1 is compensated: e^{-lr} - 1 + lr >= 0
    LevyTriplet small{0.0, 0.0, {{0.5, 4.0}}, 0.0};
    CHECK(psi(small, 2.0) == doctest::Approx(4.0 * (std::exp(-1.0) - 1.0 + 1.0)));
}

TEST_CASE("triplet validation") {
    LevyTriplet t{0.0, -1.0, {}, 0.0};
    CHECK_THROWS_AS(t.check(), std::invalid_argument);
    t = {0.0, 0.0, {{1.0, -2.0}}, 0.0};
    CHECK_THROWS_AS(t.check(), std::invalid_argument);
    t = {0.0, 0.0, {{0.0, 1.0}}, 0.0};
    CHECK_THROWS_AS(t.check(), std::invalid_argument);
    t = {0.0, 0.0,
         {{std::numeric_limits<double>::infinity(), 1.0},
          {std::numeric_limits<double>::infinity(), 1.0}},
         0.0};
    CHECK_THROWS_AS(t.check(), std::invalid_argument);
    t = {1.0, 1.0, {{2.0, 3.0}}, 0.0};
    CHECK_NOTHROW(t.check());
    CHECK(t.total_rate() == doctest::Approx(3.0));
    CHECK(t.killing_mass() == 0.0);
}

TEST_CASE("psi is convex and eventually increasing") {
    const std::vector<Mechanism> ms{QuadraticMech{1.0}, LogisticMech{},
                                    BirthDeathMech{2.0, 1.0},
                                    LevyTriplet{0.5, 1.0, {{0.3, 2.0}, {2.0, 0.5}}, 0.0}};
    for (const Mechanism& m : ms) {
        for (double l = 0.0; l <= 10.0 - 0.2; l += 0.1) {
            const double second =
                psi(m, l) - 2.0 * psi(m, l + 0.1) + psi(m, l + 0.2);
            CHECK(second >= -1e-9);
        }
    }
}

TEST_CASE("flow matches analytic solutions") {
    // quadratic: u_t = lambda / (1 + lambda t)
    for (double l : {0.5, 1.0, 2.0, 4.0})
        for (double t : {0.1, 0.5, 1.0, 2.0})
            CHECK(flow(QuadraticMech{1.0}, l, t) ==
                  doctest::Approx(l / (1.0 + l * t)).epsilon(1e-9));
    // linear: u_t = lambda e^{-ct}
    CHECK(flow(LinearMech{1.0}, 2.0, 1.5) == doctest::Approx(2.0 * std::exp(-1.5)).epsilon(1e-9));
    // pure killing: u' = q, so u_t = lambda + q t
    CHECK(flow(ConstantMech{0.7}, 1.0, 2.0) == doctest::Approx(1.0 + 1.4).epsilon(1e-9));
    // logistic: u' = u - u^2, u_t = lambda e^t / (1 - lambda + lambda e^t)
    for (double l : {0.25, 0.5, 2.0}) {
        const double t = 1.0;
        const double want = l * std::exp(t) / (1.0 - l + l * std::exp(t));
        CHECK(flow(LogisticMech{}, l, t) == doctest::Approx(want).epsilon(1e-9));
    }
    CHECK(flow(QuadraticMech{1.0}, 3.0, 0.0) == 3.0);
    CHECK_THROWS_AS(flow(QuadraticMech{1.0}, -1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(flow(QuadraticMech{1.0}, 1.0, -1.0), std::domain_error);
}

TEST_CASE("flow reports blow-up with its escape time") {
    // psi(u) = -a u with a = 100: u grows like e^{100 t}, escaping fast
    const LevyTriplet t{100.0, 0.0, {}, 0.0};
    const FlowResult r = flow_full(t, 1.0, 1.0);
    CHECK(r.blew_up());
    CHECK(std::isinf(r.value));
    CHECK(*r.blowup_time == doctest::Approx(std::log(1e12) / 100.0).epsilon(0.1));
    // same flow stopped before the escape is finite
    CHECK(flow(t, 1.0, 0.05) == doctest::Approx(std::exp(5.0)).epsilon(1e-8));
}

TEST_CASE("semigroup composition") {
    for (double s : {0.2, 0.7})
        for (double t : {0.3, 1.0})
            CHECK(semigroup_defect(QuadraticMech{1.0}, 2.0, s, t) < 1e-8);
}

TEST_CASE("largest root of psi") {
    CHECK(largest_root(QuadraticMech{1.0}).value == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(largest_root(LogisticMech{}).value == doctest::Approx(1.0).epsilon(1e-10));
    const RootResult bd = largest_root(BirthDeathMech{2.0, 1.0});
    CHECK(!bd.at_infinity);
    CHECK(bd.value == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    // pure killing: psi < 0 everywhere, root escapes to infinity
    CHECK(largest_root(ConstantMech{1.0}).at_infinity);
    // critical linear: psi = c u with root 0
    CHECK(largest_root(LinearMech{1.0}).value == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("phi inverts psi above the root") {
    // quadratic: phi(x) = sqrt(x)
    CHECK(phi(QuadraticMech{1.0}, 4.0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(phi(QuadraticMech{1.0}, 0.0) == doctest::Approx(0.0).epsilon(1e-9));
    // birth-death: phi(0) is the largest root
    CHECK(phi(BirthDeathMech{2.0, 1.0}, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    // consistency: psi(phi(x)) = x
    for (double x : {0.5, 1.0, 3.0}) {
        const double p = phi(BirthDeathMech{2.0, 1.0}, x);
        CHECK(psi(BirthDeathMech{2.0, 1.0}, p) == doctest::Approx(x).epsilon(1e-8));
    }
    CHECK_THROWS_AS(phi(ConstantMech{1.0}, 1.0), std::domain_error);
    CHECK_THROWS_AS(phi(QuadraticMech{1.0}, -1.0), std::domain_error);
}

TEST_CASE("flow table covers the grid") {
    const FlowTable tab = flow_table(QuadraticMech{1.0}, {0.5, 1.0}, {0.0, 0.5, 1.0});
    REQUIRE(tab.u.size() == 3);
    REQUIRE(tab.u[0].size() == 2);
    CHECK(tab.u[0][1] == doctest::Approx(1.0));  // t = 0
    CHECK(tab.u[2][1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("small-jump truncation folds mass into drift") {
    LevyTriplet t{1.0, 0.0, {{0.001, 5.0}, {2.0, 1.0}}, 0.0};
    const LevyTriplet cut = truncate_small_jumps(t, 0.01);
    REQUIRE(cut.atoms.size() == 1);
    CHECK(cut.atoms[0].size == 2.0);
    // the dropped atom was compensated, so the drift is untouched
    CHECK(cut.drift == doctest::Approx(1.0));
    CHECK(cut.small_jump_cutoff == 0.01);
    // only curvature rate * (e^{-lr} - 1 + lr) = O(r^2) is lost
    CHECK(std::abs(psi(cut, 0.5) - psi(t, 0.5)) < 1e-5);
    CHECK_THROWS_AS(truncate_small_jumps(t, -1.0), std::invalid_argument);
}

TEST_CASE("quantile atomization of a flat density") {
    const auto atoms = quantile_atomize([](double) { return 1.0; }, 0.0, 1.0, 4);
    REQUIRE(atoms.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(atoms[i].size == doctest::Approx(0.125 + 0.25 * i).epsilon(1e-6));
        CHECK(atoms[i].rate == doctest::Approx(0.25).epsilon(1e-6));
    }
    CHECK_THROWS_AS(quantile_atomize([](double) { return 1.0; }, 1.0, 0.0, 4),
                    std::invalid_argument);
}
