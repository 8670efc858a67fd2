#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csbp/path.hpp"

using namespace csbp;

TEST_CASE("ExtReal rejects negatives and saturates addition") {
    CHECK_THROWS_AS(ExtReal(-1.0), std::domain_error);
    CHECK(ExtReal(2.0).get() == 2.0);
    CHECK(ExtReal::infinity().is_infinite());
    CHECK((ExtReal(3.0) + ExtReal::infinity()).is_infinite());
    CHECK((ExtReal(1.0) + ExtReal(2.0)).get() == 3.0);
    CHECK(ExtReal(0.0).is_zero());
}

TEST_CASE("validate accepts absorbed step paths") {
    const CadlagPath p = CadlagPath::event({0.0, 1.0, 3.0},
                                           {ExtReal(2.0), ExtReal(4.0), ExtReal(0.0)},
                                           ExtReal(0.0));
    CHECK(!validate(p));
    CHECK(!validate(CadlagPath::zero()));
    const CadlagPath q = CadlagPath::event({0.0, 1.0},
                                           {ExtReal(2.0), ExtReal::infinity()},
                                           ExtReal::infinity());
    CHECK(!validate(q));
}

TEST_CASE("validate flags structural defects") {
    // null jump
    CadlagPath p = CadlagPath::event({0.0, 1.0, 2.0},
                                     {ExtReal(2.0), ExtReal(2.0), ExtReal(0.0)},
                                     ExtReal(0.0));
    auto v = validate(p);
    REQUIRE(v.has_value());
    CHECK(v->message.find("null jump") != std::string::npos);

    // absorption broken: leaves 0 again
    p = CadlagPath::event({0.0, 1.0, 2.0},
                          {ExtReal(2.0), ExtReal(0.0), ExtReal(3.0)}, ExtReal(0.0));
    v = validate(p);
    REQUIRE(v.has_value());
    CHECK(v->message.find("absorption broken") != std::string::npos);

    // terminal unreachable: ends at a finite positive value without a horizon
    p = CadlagPath::event({0.0, 1.0}, {ExtReal(2.0), ExtReal(5.0)}, ExtReal(0.0));
    v = validate(p);
    REQUIRE(v.has_value());
    CHECK(v->message.find("terminal unreachable") != std::string::npos);

    // same path with a truncation horizon is fine
    p.horizon = 4.0;
    CHECK(!validate(p));

    // terminal must be 0 or inf: CadlagPath built by hand
    CadlagPath bad;
    bad.times = {0.0};
    bad.values = {ExtReal(1.0)};
    bad.terminal = ExtReal(1.0);
    v = validate(bad);
    REQUIRE(v.has_value());
    CHECK(v->message.find("terminal") != std::string::npos);

    // breakpoints must increase strictly
    p = CadlagPath::event({0.0, 1.0, 1.0},
                          {ExtReal(2.0), ExtReal(3.0), ExtReal(0.0)}, ExtReal(0.0));
    CHECK(validate(p).has_value());

    // first breakpoint must be 0
    p = CadlagPath::event({0.5, 1.0}, {ExtReal(2.0), ExtReal(0.0)}, ExtReal(0.0));
    CHECK(validate(p).has_value());

    CHECK_THROWS_AS(require_valid(p), std::invalid_argument);
}

TEST_CASE("eval is right-continuous with terminal extension") {
    const CadlagPath p = CadlagPath::event({0.0, 1.0, 3.0},
                                           {ExtReal(2.0), ExtReal(4.0), ExtReal(0.0)},
                                           ExtReal(0.0));
    CHECK(eval(p, 0.0).get() == 2.0);
    CHECK(eval(p, 0.999).get() == 2.0);
    CHECK(eval(p, 1.0).get() == 4.0);  // right-continuous at the jump
    CHECK(eval(p, 2.5).get() == 4.0);
    CHECK(eval(p, 3.0).is_zero());
    CHECK(eval(p, 100.0).is_zero());  // beyond the last breakpoint: terminal
    CHECK_THROWS_AS(eval(p, -0.1), std::domain_error);
}

TEST_CASE("eval respects truncation horizons") {
    const CadlagPath p = CadlagPath::event({0.0, 1.0}, {ExtReal(2.0), ExtReal(5.0)},
                                           ExtReal(0.0), 4.0);
    CHECK(eval(p, 4.0).get() == 5.0);
    CHECK_THROWS_AS(eval(p, 4.5), std::domain_error);
}

TEST_CASE("eval on grid paths uses floor-node lookup") {
    const CadlagPath p = CadlagPath::grid(0.5, {ExtReal(1.0), ExtReal(2.0), ExtReal(0.0)},
                                          ExtReal(0.0));
    CHECK(eval(p, 0.0).get() == 1.0);
    CHECK(eval(p, 0.49).get() == 1.0);
    CHECK(eval(p, 0.5).get() == 2.0);
    CHECK(eval(p, 1.0).is_zero());
    CHECK(eval(p, 10.0).is_zero());
    CHECK(p.last_time() == 1.0);
    CHECK(p.node_time(2) == 1.0);
}

TEST_CASE("jumps lists signed sizes; infinity is +inf") {
    const CadlagPath p = CadlagPath::event(
        {0.0, 1.0, 2.0, 3.0},
        {ExtReal(2.0), ExtReal(5.0), ExtReal(4.0), ExtReal::infinity()},
        ExtReal::infinity());
    const std::vector<Jump> js = jumps(p);
    REQUIRE(js.size() == 3);
    CHECK(js[0].time == 1.0);
    CHECK(js[0].size == 3.0);
    CHECK(js[1].size == -1.0);
    CHECK(std::isinf(js[2].size));

    const CadlagPath g = CadlagPath::grid(0.5, {ExtReal(1.0), ExtReal(0.0)}, ExtReal(0.0));
    CHECK_THROWS_AS(jumps(g), std::invalid_argument);
}

TEST_CASE("domain bookkeeping") {
    const CadlagPath p = CadlagPath::event({0.0}, {ExtReal(3.0)}, ExtReal(0.0), 2.0);
    CHECK(p.truncated());
    CHECK(p.domain_end() == 2.0);
    const CadlagPath q = CadlagPath::zero();
    CHECK(!q.truncated());
    CHECK(std::isinf(q.domain_end()));
}
