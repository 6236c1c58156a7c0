#include "doctest.h"
#include "fracbubble/params.hpp"

using namespace fracbubble;

TEST_SUITE_BEGIN("params");

TEST_CASE("derived exponents") {
    FracParams p = make_params(2, 0.25);
    CHECK(p.critical_exponent == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(p.trace_weight == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(p.near_half);

    FracParams q = make_params(3, 0.75);
    CHECK(q.critical_exponent == doctest::Approx(4.5 / 1.5).epsilon(1e-15));
    CHECK(q.trace_weight == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("near-half flag") {
    CHECK(make_params(2, 0.5).near_half);
    CHECK(make_params(2, 0.4995).near_half);
    CHECK_FALSE(make_params(2, 0.498).near_half);
}

TEST_CASE("rejects out-of-range parameters") {
    CHECK_THROWS_AS(make_params(1, 0.5), std::invalid_argument);   // n - 2g = 0
    CHECK_THROWS_AS(make_params(1, 0.75), std::invalid_argument);  // n - 2g < 0
    CHECK_THROWS_AS(make_params(2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_params(2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_params(2, -0.25), std::invalid_argument);
    CHECK_THROWS_AS(make_params(0, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(make_params(4, 0.25), std::invalid_argument);
    CHECK_NOTHROW(make_params(1, 0.25));
    CHECK_NOTHROW(make_params(3, 0.9));
}

TEST_CASE("positivity of n - 2g across the admissible grid") {
    for (int n = 1; n <= 3; ++n)
        for (double g = 0.05; g < 1.0; g += 0.05) {
            if (n - 2.0 * g <= 0.0) {
                CHECK_THROWS_AS(make_params(n, g), std::invalid_argument);
            } else {
                FracParams p = make_params(n, g);
                CHECK(p.critical_exponent > 1.0);
                CHECK(n - 2.0 * p.gamma > 0.0);
            }
        }
}

TEST_CASE("bubble validation") {
    CHECK_THROWS_AS(make_bubble(vec(0, 0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_bubble(vec(0, 0), -2.0), std::invalid_argument);
    Bubble b = make_bubble(vec(1, 2), 4.0);
    CHECK(b.scale == 4.0);
    CHECK(b.center[1] == 2.0);
}

TEST_SUITE_END();
