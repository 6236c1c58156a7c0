#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "doctest.h"
#include "fracbubble/constants.hpp"

using namespace fracbubble;

namespace {

// Test-side closed forms (Gamma-function cross-checks only; the library never
// consumes these).
double c1_closed(int n) {
    return std::pow(M_PI, 0.5 * n) * std::tgamma(0.5 * n) / std::tgamma((double)n);
}

double c3_closed(int n, double g) {
    return std::pow(M_PI, 0.5 * n) * std::tgamma(g) / std::tgamma(0.5 * n + g);
}

double cfrac_closed(int n, double g) {
    return std::pow(2.0, 2.0 * g) * std::tgamma(0.5 * n + g) / std::tgamma(0.5 * n - g);
}

double dstar_closed(double g) {
    return std::pow(2.0, 2.0 * g - 1.0) * std::tgamma(g) / std::tgamma(1.0 - g);
}

const std::vector<FracParams> kMatrix = {
    make_params(2, 0.25), make_params(2, 0.75),
    make_params(3, 0.25), make_params(3, 0.75)};

}  // namespace

TEST_SUITE_BEGIN("constants");

TEST_CASE("pure-integral entries match analytic values") {
    // Measured by radial quadrature; the Gamma expressions are cross-checks.
    for (const FracParams& p : kMatrix) {
        const ConstantSet& cs = cached_constants(p);
        CHECK(cs.c1 == doctest::Approx(c1_closed(p.n)).epsilon(1e-8));
        CHECK(cs.c3 == doctest::Approx(c3_closed(p.n, p.gamma)).epsilon(1e-8));
    }
    // Named values quoted elsewhere in the docs.
    CHECK(cached_constants(make_params(2, 0.25)).c1 ==
          doctest::Approx(M_PI).epsilon(1e-8));
    CHECK(cached_constants(make_params(2, 0.25)).c3 ==
          doctest::Approx(4.0 * M_PI).epsilon(1e-8));
    CHECK(compute_constants(make_params(3, 0.5)).c3 ==
          doctest::Approx(M_PI * M_PI).epsilon(1e-8));
}

TEST_CASE("derived entries are exact combinations of measured ones") {
    for (const FracParams& p : kMatrix) {
        const ConstantSet& cs = cached_constants(p);
        CHECK(cs.c4 == cs.c_frac * cs.c3);
        CHECK(cs.c_star == cs.d_star * cs.c3);
        CHECK(cs.d_gamma == 2.0 * p.gamma * cs.d_star);
        CHECK(std::fabs(cs.p_poisson * cs.c3 - 1.0) <= 1e-15);
        CHECK(cs.yamabe_sphere ==
              cs.c2 / std::pow(cs.c1, (p.n - 2.0 * p.gamma) / p.n));
    }
}

TEST_CASE("independent oracle routes agree across the parameter matrix") {
    for (const FracParams& p : kMatrix) {
        CAPTURE(p.n);
        CAPTURE(p.gamma);
        const ConstantSet& cs = cached_constants(p);
        CHECK(cs.converged);
        CHECK(cs.expansion_available);

        // The extension-energy route (c2) versus the PV-ratio route (c_frac*c1):
        // measured residual is <= 8.1e-5 over the matrix, gated at the
        // acceptance tolerance.
        CHECK(std::isfinite(cs.energy_identity_rel));
        CHECK(cs.energy_identity_rel <= 1e-3);
        CHECK(cs.relations_ok);

        // Oracle self-diagnostics sit well inside their gates.
        CHECK(cs.pde_ratio_spread < 1e-6);
        CHECK(cs.d_star_spread <= 1e-2);
        CHECK(cs.extension_gap < 5e-3);

        CHECK(cs.g_green > 0.0);
        CHECK(cs.yamabe_sphere > 0.0);
    }

    // The trace calibration depends only on gamma; two boundary dimensions
    // must extract the same value.
    for (double g : {0.25, 0.75}) {
        const double d2 = cached_constants(make_params(2, g)).d_star;
        const double d3 = cached_constants(make_params(3, g)).d_star;
        CHECK(std::fabs(d2 - d3) / d2 <= 2e-4);
    }
}

TEST_CASE("expansion entries match their Gamma-function closed forms") {
    for (const FracParams& p : kMatrix) {
        CAPTURE(p.n);
        CAPTURE(p.gamma);
        const ConstantSet& cs = cached_constants(p);
        CHECK(cs.c_frac ==
              doctest::Approx(cfrac_closed(p.n, p.gamma)).epsilon(1e-6));
        CHECK(cs.d_star == doctest::Approx(dstar_closed(p.gamma)).epsilon(5e-4));
        const double y_exact = cfrac_closed(p.n, p.gamma) * c1_closed(p.n) /
                               std::pow(c1_closed(p.n), (p.n - 2.0 * p.gamma) / p.n);
        CHECK(cs.yamabe_sphere == doctest::Approx(y_exact).epsilon(5e-4));
    }
    // Spot values of the calibration constant.
    CHECK(cached_constants(make_params(2, 0.25)).d_star ==
          doctest::Approx(2.0920992401).epsilon(5e-4));
    CHECK(cached_constants(make_params(2, 0.75)).d_star ==
          doctest::Approx(0.4779887975).epsilon(5e-4));
}

TEST_CASE("guard band near gamma = 1/2 reports unavailable expansion entries") {
    const ConstantSet cs = compute_constants(make_params(2, 0.5));
    CHECK(cs.converged);
    CHECK_FALSE(cs.expansion_available);
    CHECK(cs.c1 == doctest::Approx(c1_closed(2)).epsilon(1e-8));
    CHECK(cs.c3 == doctest::Approx(c3_closed(2, 0.5)).epsilon(1e-8));
    CHECK(cs.p_poisson == 1.0 / cs.c3);
    CHECK(std::isnan(cs.c_frac));
    CHECK(std::isnan(cs.d_star));
    CHECK(std::isnan(cs.c2));
    CHECK(std::isnan(cs.yamabe_sphere));
    CHECK(std::isnan(cs.energy_identity_rel));
    CHECK(cs.relations_ok);  // vacuous: nothing checkable was violated
}

TEST_CASE("recomputation is bitwise deterministic") {
    const FracParams p = make_params(1, 0.25);
    const ConstantSet a = compute_constants(p);
    const ConstantSet b = compute_constants(p);
    CHECK(a.c1 == b.c1);
    CHECK(a.c3 == b.c3);
    CHECK(a.c_frac == b.c_frac);
    CHECK(a.d_star == b.d_star);
    CHECK(a.c2 == b.c2);
    CHECK(a.g_green == b.g_green);
    CHECK(a.yamabe_sphere == b.yamabe_sphere);
    CHECK(a.energy_identity_rel == b.energy_identity_rel);
    CHECK(a.converged == b.converged);

    // The cache returns one stable object per key, equal to a fresh compute.
    const ConstantSet& c = cached_constants(p);
    const ConstantSet& d = cached_constants(p);
    CHECK(&c == &d);
    CHECK(c.c1 == a.c1);
    CHECK(c.d_star == a.d_star);
    // A different budget is a different key.
    const ConstantSet& e = cached_constants(p, 20'000'000);
    CHECK(&e != &c);
}

TEST_CASE("concurrent cache access yields one shared entry") {
    const FracParams p = make_params(1, 0.3);
    std::vector<const ConstantSet*> got(4, nullptr);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] { got[t] = &cached_constants(p); });
    for (auto& th : pool) th.join();
    for (int t = 1; t < 4; ++t) CHECK(got[t] == got[0]);
    CHECK(got[0]->converged);
    CHECK(got[0]->c1 == doctest::Approx(c1_closed(1)).epsilon(1e-8));
}

TEST_CASE("starved budget degrades to an unconverged set instead of throwing") {
    ConstantSet cs;
    CHECK_NOTHROW(cs = compute_constants(make_params(2, 0.25), 1000));
    CHECK_FALSE(cs.converged);
    CHECK_FALSE(cs.relations_ok);
    CHECK(cs.expansion_available);
    CHECK(std::isnan(cs.d_star));  // trace oracles never produced a value
}

TEST_SUITE_END();
