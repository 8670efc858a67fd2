#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csbp/skorohod.hpp"

using namespace csbp;

namespace {

CadlagPath unit_jump_at(double t_jump, double lo, double hi) {
    return CadlagPath::event({0.0, t_jump, t_jump + 10.0},
                             {ExtReal(lo), ExtReal(hi), ExtReal(0.0)}, ExtReal(0.0));
}

}  // namespace

TEST_CASE("state squashing and metric") {
    CHECK(squash(ExtReal(0.0)) == 0.0);
    CHECK(squash(ExtReal(1.0)) == doctest::Approx(0.5));
    CHECK(squash(ExtReal::infinity()) == 1.0);
    CHECK(rho(ExtReal(0.0), ExtReal::infinity()) == 1.0);
    CHECK(rho(ExtReal(2.0), ExtReal(2.0)) == 0.0);
    CHECK(rho(ExtReal(1.0), ExtReal(3.0)) == doctest::Approx(0.25));
}

TEST_CASE("grid to event conversion keeps change points and absorption") {
    const CadlagPath g = CadlagPath::grid(
        0.5, {ExtReal(1.0), ExtReal(1.0), ExtReal(2.0), ExtReal(0.0)}, ExtReal(0.0));
    const CadlagPath e = to_event(g);
    CHECK(e.kind == PathKind::Event);
    REQUIRE(e.values.size() == 3);
    CHECK(e.times[0] == 0.0);
    CHECK(e.times[1] == doctest::Approx(1.0));
    CHECK(e.times[2] == doctest::Approx(1.5));
    CHECK(e.values[2].is_zero());
    CHECK(!validate(e));
}

TEST_CASE("distance of a path to itself is zero") {
    const CadlagPath f = unit_jump_at(1.0, 1.0, 2.0);
    const Bounds b = dist_t(f, f, 5.0);
    CHECK(b.lower == 0.0);
    CHECK(b.upper == 0.0);
    CHECK(dist_usual(f, f) == 0.0);
    const Bounds bi = dist_inf(f, f);
    CHECK(bi.upper == 0.0);
}

TEST_CASE("nearby jump times cost the warp displacement") {
    const CadlagPath f = unit_jump_at(1.0, 1.0, 2.0);
    const CadlagPath g = unit_jump_at(1.05, 1.0, 2.0);
    const Bounds b = dist_t(f, g, 3.0);
    // aligning the jumps costs 0.05; not aligning costs rho(1,2) = 1/6
    CHECK(b.upper <= 0.05 + 1e-9);
    CHECK(b.lower >= 0.04);
    CHECK(b.lower <= b.upper);
}

TEST_CASE("constant value offset costs the state distance") {
    const CadlagPath f = CadlagPath::event({0.0, 5.0}, {ExtReal(1.0), ExtReal(0.0)},
                                           ExtReal(0.0));
    const CadlagPath g = CadlagPath::event({0.0, 5.0}, {ExtReal(1.1), ExtReal(0.0)},
                                           ExtReal(0.0));
    const double want = std::abs(0.5 - 1.1 / 2.1);
    const Bounds b = dist_t(f, g, 3.0);
    CHECK(b.upper == doctest::Approx(want).epsilon(1e-9));
    CHECK(b.lower == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("upper bound never exceeds the uniform distance") {
    const CadlagPath f = unit_jump_at(1.0, 2.0, 3.0);
    const CadlagPath g = unit_jump_at(1.4, 1.5, 3.5);
    const Bounds b = dist_t(f, g, 4.0);
    double sup = 0.0;
    for (double s = 0.0; s <= 4.0; s += 0.001)
        sup = std::max(sup, rho(eval(f, s), eval(g, s)));
    CHECK(b.upper <= sup + 1e-9);
    CHECK(b.lower <= b.upper);
}

TEST_CASE("zero path and exploding path are at the cap") {
    const CadlagPath z = CadlagPath::zero();
    const CadlagPath inf_path = CadlagPath::event({0.0}, {ExtReal::infinity()},
                                                  ExtReal::infinity());
    const Bounds b = dist_t(z, inf_path, 2.0);
    CHECK(b.lower == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(b.upper == doctest::Approx(1.0).epsilon(1e-9));
    const double d = dist_usual(z, inf_path);
    CHECK(d > 0.99);
    CHECK(d <= 1.0);
    const Bounds bi = dist_inf(z, inf_path);
    CHECK(bi.lower == 1.0);
    CHECK(bi.upper == 1.0);
}

TEST_CASE("dist_inf requires complete paths and separates terminals") {
    const CadlagPath f = unit_jump_at(1.0, 1.0, 2.0);
    CadlagPath cut = f;
    cut.values.pop_back();
    cut.times.pop_back();
    cut.horizon = 12.0;
    CHECK_THROWS_AS(dist_inf(f, cut), std::invalid_argument);

    const CadlagPath g = CadlagPath::event({0.0, 1.0},
                                           {ExtReal(1.0), ExtReal::infinity()},
                                           ExtReal::infinity());
    const Bounds b = dist_inf(f, g);
    CHECK(b.lower == 1.0);
    CHECK(b.upper == 1.0);
}

TEST_CASE("bounds are symmetric up to their own gap") {
    const CadlagPath f = unit_jump_at(0.8, 1.0, 4.0);
    const CadlagPath g = unit_jump_at(1.1, 1.2, 3.0);
    const Bounds fg = dist_t(f, g, 3.0);
    const Bounds gf = dist_t(g, f, 3.0);
    // both bracket the same symmetric quantity
    CHECK(fg.lower <= gf.upper + 1e-9);
    CHECK(gf.lower <= fg.upper + 1e-9);
}

TEST_CASE("triangle inequality holds through the brackets") {
    const CadlagPath f = unit_jump_at(0.8, 1.0, 4.0);
    const CadlagPath g = unit_jump_at(1.0, 1.1, 3.5);
    const CadlagPath h = unit_jump_at(1.2, 1.3, 3.0);
    const Bounds fh = dist_t(f, h, 3.0);
    const Bounds fg = dist_t(f, g, 3.0);
    const Bounds gh = dist_t(g, h, 3.0);
    CHECK(fh.lower <= fg.upper + gh.upper + 1e-9);
}

TEST_CASE("metric window rejects truncated paths") {
    const CadlagPath cut = CadlagPath::event({0.0}, {ExtReal(1.0)}, ExtReal(0.0), 1.0);
    const CadlagPath f = unit_jump_at(1.0, 1.0, 2.0);
    CHECK_THROWS_AS(dist_t(cut, f, 5.0), std::domain_error);
    // but a window inside the horizon is fine
    CHECK_NOTHROW(dist_t(cut, f, 0.5));
}

TEST_CASE("discounted distance weighs early discrepancies more") {
    const CadlagPath base = unit_jump_at(0.5, 1.0, 2.0);
    const CadlagPath early = unit_jump_at(0.7, 1.0, 2.0);
    const CadlagPath late = unit_jump_at(3.5, 1.0, 2.0);
    const CadlagPath late2 = unit_jump_at(3.7, 1.0, 2.0);
    const double d_early = dist_usual(base, early);
    const double d_late = dist_usual(late, late2);
    CHECK(d_early > d_late);
    CHECK(d_late > 0.0);
}

TEST_CASE("total reciprocal integral of (1+s)^2 is one") {
    CHECK(skdetail::graded_reciprocal_integral() == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("blow-up example paths have the advertised shape") {
    const CadlagPath f = skdetail::example1_full_path(0.01, 12.0);
    CHECK(f.terminal.is_infinite());
    CHECK(eval(f, 2.0).get() == doctest::Approx(9.0));
    CHECK(f.values.back().is_infinite());
    const CadlagPath fn = skdetail::example1_truncation(0.01, 12.0, 2.0);
    CHECK(fn.terminal.is_zero());
    CHECK(eval(fn, 1.99).get() == doctest::Approx((2.99) * (2.99)));
    CHECK(fn.values.back().is_zero());
    CHECK(!validate(f));
    CHECK(!validate(fn));
}
