#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fracbubble/bubbles.hpp"
#include "fracbubble/extension.hpp"

using namespace fracbubble;

namespace {

// Test-side closed forms (Gamma-function cross-checks only; the library never
// consumes these).
double c3_closed(int n, double g) {
    return std::pow(M_PI, 0.5 * n) * std::tgamma(g) / std::tgamma(0.5 * n + g);
}
double c1_closed(int n) {
    return std::pow(M_PI, 0.5 * n) * std::tgamma(0.5 * n) / std::tgamma((double)n);
}
double cfrac_closed(int n, double g) {
    return std::pow(2.0, 2.0 * g) * std::tgamma(0.5 * n + g) / std::tgamma(0.5 * n - g);
}
double dstar_closed(double g) {
    return std::pow(2.0, 2.0 * g - 1.0) * std::tgamma(g) / std::tgamma(1.0 - g);
}
double green_closed(int n, double g) {
    return std::tgamma(0.5 * n - g) /
           (std::pow(4.0, g) * std::pow(M_PI, 0.5 * n) * std::tgamma(g));
}

}  // namespace

TEST_SUITE_BEGIN("extension");

TEST_CASE("kernel closed form, normalization constant, translation invariance") {
    FracParams p = make_params(2, 0.25);
    Budget budget{default_budget()};
    PoissonKernel K(p, budget);

    // normalization = 1/c3; for n=2 c3 = pi^1 Gamma(g)/Gamma(1+g) = pi/g
    CHECK(K.norm_constant() == doctest::Approx(1.0 / c3_closed(2, 0.25)).epsilon(1e-8));
    // n=2, g=1/4: 1/c3 = 1/(4 pi)
    CHECK(K.norm_constant() == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-8));

    // K = p y^{2g} / (y^2 + |x-xi|^2)^{(n+2g)/2}
    const double y = 0.7;
    const Vec x = vec(0.3, -0.2), xi = vec(-0.1, 0.5);
    const double q2 = y * y + norm2(sub(x, xi), p.n);
    CHECK(K(y, x, xi) == doctest::Approx(K.norm_constant() * std::pow(y, 0.5) *
                                         std::pow(q2, -1.25))
                             .epsilon(1e-14));
    // translation invariance and radial form
    CHECK(K(y, x, xi) == K(y, vec(0, 0), sub(xi, x)));
    CHECK(K(y, x, xi) ==
          doctest::Approx(K.radial(y, std::sqrt(norm2(sub(x, xi), p.n)))).epsilon(1e-14));
}

TEST_CASE("kernel mass is one at all heights") {
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        Budget budget{default_budget()};
        PoissonKernel K(p, budget);
        for (double y : {0.1, 1.0, 10.0}) {
            QuadResult mass = kernel_mass(K, y, QuadTol{1e-10, 1e-9}, budget);
            CHECK(mass.converged);
            CHECK(mass.value == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("convolution is an approximate identity as y drops") {
    FracParams p = make_params(2, 0.25);
    Budget budget{100000000};
    PoissonKernel K(p, budget);
    Bubble b = make_bubble(vec(0, 0), 1.0);
    const Vec x = vec(0.3, 0);
    const double target = eval_bubble(b, x, p);
    double prev = 1e300;
    for (double y : {0.2, 0.05, 0.0125}) {
        QuadResult q = extend_bubble_convolution(K, b, y, x, QuadTol{1e-11, 1e-8}, budget);
        REQUIRE(q.converged);
        const double err = std::abs(q.value - target);
        CHECK(err < prev);
        prev = err;
    }
    // the boundary layer shrinks like y^{2g}
    CHECK(prev < 0.15 * std::abs(target) + 1e-12);
}

TEST_CASE("convolution obeys the exact scaling covariance") {
    FracParams p = make_params(2, 0.25);
    Budget budget{200000000};
    PoissonKernel K(p, budget);
    const double lam = 4.0, m = 0.5 * (p.n - 2.0 * p.gamma);
    Bubble unit = make_bubble(vec(0, 0), 1.0);
    Bubble fat = make_bubble(vec(0, 0), lam);
    const double y = 0.3;
    const Vec x = vec(0.7, 0);
    QuadResult lhs = extend_bubble_convolution(K, fat, y, x, QuadTol{1e-12, 1e-10}, budget);
    QuadResult rhs = extend_bubble_convolution(K, unit, lam * y, scale(x, lam),
                                               QuadTol{1e-12, 1e-10}, budget);
    REQUIRE(lhs.converged);
    REQUIRE(rhs.converged);
    CHECK(lhs.value ==
          doctest::Approx(std::pow(lam, m) * rhs.value).epsilon(1e-8));
}

TEST_CASE("radial fast path agrees with the generic reduction") {
    FracParams p = make_params(3, 0.25);
    Budget budget{200000000};
    PoissonKernel K(p, budget);
    Bubble b = make_bubble(vec(0, 0, 0), 1.0);
    QuadResult on_axis =
        extend_bubble_convolution(K, b, 0.4, vec(0, 0, 0), QuadTol{1e-12, 1e-10}, budget);
    QuadResult near_axis = extend_bubble_convolution(K, b, 0.4, vec(1e-5, 0, 0),
                                                     QuadTol{1e-12, 1e-10}, budget);
    REQUIRE(on_axis.converged);
    REQUIRE(near_axis.converged);
    CHECK(on_axis.value == doctest::Approx(near_axis.value).epsilon(1e-7));
}

TEST_CASE("trace expansion fit recovers synthetic coefficients") {
    FracParams p = make_params(2, 0.25);
    std::vector<double> ys, us2, us3;
    for (int i = 0; i < 14; ++i) {
        double y = 0.01 * std::pow(10.0, i / 13.0);
        ys.push_back(y);
        us2.push_back(2.0 - 3.0 * std::pow(y, 0.5));
        us3.push_back(2.0 - 3.0 * std::pow(y, 0.5) + 0.7 * y * y);
    }
    TraceExpansion a = fit_trace_expansion(ys, us2, p, 2);
    CHECK(a.v0 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(a.v1 == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(a.fit_residual < 1e-12);
    TraceExpansion c = fit_trace_expansion(ys, us3, p, 3);
    CHECK(c.v0 == doctest::Approx(2.0).epsilon(1e-11));
    CHECK(c.v1 == doctest::Approx(-3.0).epsilon(1e-11));
    TraceExpansion d = fit_trace_expansion(ys, us3, p, 4);
    CHECK(d.v1 == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("trace coefficient of the unit bubble at its center") {
    // For n = 2 the coefficient of y^{2g} at the center is exactly -1 for every g:
    // the ratio of the trace constant to the normal-derivative constant is 2g.
    FracParams p = make_params(2, 0.25);
    Budget budget{200000000};
    CHECK(unit_bubble_vbar0(p, budget) == doctest::Approx(-1.0).epsilon(5e-4));
}

TEST_CASE("normal-derivative constant from bubble traces: flat across scales") {
    FracParams p = make_params(2, 0.25);
    Budget budget{400000000};
    PdeResidual pde = bubble_pde_residual(make_bubble(vec(0, 0), 1.0), p,
                                          QuadTol{1e-11, 1e-9}, budget);
    REQUIRE(pde.converged);
    TraceCalibration cal =
        extract_d_star(p, pde.mean_ratio, {1.0, 4.0, 16.0}, {0.0, 0.3, 0.7}, budget);
    CHECK(cal.spread <= 1e-2);
    // Gamma-function cross-check of the extracted constant
    CHECK(cal.d_star == doctest::Approx(dstar_closed(p.gamma)).epsilon(2e-3));
}

TEST_CASE("grid solver reproduces discrete-harmonic closed forms exactly") {
    FracParams p = make_params(2, 0.25);
    GridSpec spec{64, 128, 4.0, 4.0};
    const double g2 = 2.0 * p.gamma;

    HalfSpaceField ones = grid_solve_dirichlet(
        [](double) { return 1.0; }, [](double, double) { return 1.0; }, p, spec);
    for (int j = 0; j <= spec.y_cells; j += 7)
        for (int i = 0; i <= spec.r_cells; i += 13)
            CHECK(ones.at(j, i) == doctest::Approx(1.0).epsilon(1e-12));

    // a + b y^{2g} is in the kernel of the discrete operator by construction
    auto prof = [g2](double y) { return 1.0 + 0.5 * std::pow(y, g2); };
    HalfSpaceField layer =
        field_from_function([&](double y, double) { return prof(y); }, p, spec);
    CHECK(grid_operator_residual(layer) < 1e-12);

    HalfSpaceField sol = grid_solve_dirichlet(
        [](double) { return 1.0; }, [&](double y, double) { return prof(y); }, p, spec);
    double worst = 0.0;
    for (int j = 1; j < spec.y_cells; ++j)
        for (int i = 0; i < spec.r_cells; ++i)
            worst = std::max(worst, std::abs(sol.at(j, i) - prof(sol.y_nodes[j])));
    CHECK(worst < 1e-10);
}

TEST_CASE("discrete maximum principle") {
    FracParams p = make_params(2, 0.75);
    GridSpec spec{48, 96, 4.0, 4.0};
    HalfSpaceField bump = grid_solve_dirichlet(
        [](double r) { return std::exp(-r * r); }, [](double, double) { return 0.0; }, p,
        spec);
    double lo = 1e300, hi = -1e300;
    for (double v : bump.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0 + 1e-14);
}

TEST_CASE("two independent extension oracles agree at interior probes") {
    FracParams p = make_params(2, 0.25);
    Budget budget{400000000};
    PoissonKernel K(p, budget);
    Bubble b = make_bubble(vec(0, 0), 1.0);
    const double vbar0 = unit_bubble_vbar0(p, budget);
    HalfSpaceField f = grid_lift_unit_bubble(p, GridSpec{}, vbar0);

    const double probes[10][2] = {{0.25, 0.3}, {0.5, 1.0},  {1.0, 0.5}, {1.0, 2.0},
                                  {2.0, 1.0},  {0.15, 3.0}, {3.0, 3.0}, {5.0, 2.0},
                                  {0.7, 0.0},  {4.0, 0.0}};
    for (auto& pr : probes) {
        QuadResult q = extend_bubble_convolution(K, b, pr[0], vec(pr[1], 0),
                                                 QuadTol{1e-12, 1e-8}, budget);
        REQUIRE(q.converged);
        CHECK(f.interpolate(pr[0], pr[1]) == doctest::Approx(q.value).epsilon(1e-2));
    }

    // box-doubling control of the imposed far-field data
    HalfSpaceField f16 = grid_lift_unit_bubble(p, GridSpec{256, 1024, 16.0, 16.0}, vbar0);
    double shift = 0.0;
    for (auto& pr : probes)
        shift = std::max(shift, std::abs(f.interpolate(pr[0], pr[1]) -
                                         f16.interpolate(pr[0], pr[1])) /
                                    f16.interpolate(pr[0], pr[1]));
    CHECK(shift < 5e-3);
}

TEST_CASE("grid trace expansion: closed fields, linearity, and bubble data") {
    FracParams p = make_params(2, 0.25);
    GridSpec spec{128, 256, 8.0, 8.0};
    const double g2 = 2.0 * p.gamma;

    HalfSpaceField ones =
        field_from_function([](double, double) { return 1.0; }, p, spec);
    TraceExpansion t1 = neumann_trace(ones, 0);
    CHECK(t1.v0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(t1.v1) < 1e-10);

    HalfSpaceField pure =
        field_from_function([g2](double y, double) { return std::pow(y, g2); }, p, spec);
    TraceExpansion t2 = neumann_trace(pure, 0);
    CHECK(std::abs(t2.v0) < 1e-12);
    CHECK(t2.v1 == doctest::Approx(1.0).epsilon(1e-10));

    // linearity of the trace in the field
    HalfSpaceField combo = field_lincomb(2.0, ones, -3.0, pure);
    TraceExpansion t3 = neumann_trace(combo, 0);
    CHECK(t3.v0 == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(t3.v1 == doctest::Approx(-3.0).epsilon(1e-10));

    // the solved bubble lift reproduces the convolution trace constants
    Budget budget{200000000};
    const double vbar0 = unit_bubble_vbar0(p, budget);
    HalfSpaceField f = grid_lift_unit_bubble(p, GridSpec{}, vbar0);
    TraceExpansion tb = neumann_trace(f, 0, 10.0, 3);
    CHECK(tb.v0 == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(tb.v1 == doctest::Approx(vbar0).epsilon(2e-3));
    CHECK(tb.fit_residual < 0.05);
}

TEST_CASE("normal-derivative constant re-extracted from grid columns") {
    FracParams p = make_params(2, 0.25);
    Budget budget{200000000};
    PdeResidual pde = bubble_pde_residual(make_bubble(vec(0, 0), 1.0), p,
                                          QuadTol{1e-11, 1e-9}, budget);
    REQUIRE(pde.converged);
    const double vbar0 = unit_bubble_vbar0(p, budget);
    HalfSpaceField f = grid_lift_unit_bubble(p, GridSpec{}, vbar0);
    Bubble b = make_bubble(vec(0, 0), 1.0);
    const double pcrit = p.critical_exponent;

    std::vector<double> ds;
    for (int col : {0, 32, 64}) {  // r = 0, 0.5, 1.0 on the default grid
        TraceExpansion te = neumann_trace(f, col, 10.0, 3);
        const double dval = eval_bubble(b, vec(f.r_nodes[col], 0), p);
        ds.push_back(pde.mean_ratio * std::pow(dval, pcrit) /
                     (2.0 * p.gamma * (-te.v1)));
    }
    double lo = 1e300, hi = 0.0;
    for (double v : ds) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK((hi - lo) / lo <= 1e-2);
    CHECK(ds[0] == doctest::Approx(dstar_closed(p.gamma)).epsilon(5e-3));
}

TEST_CASE("weighted gradient energy of the lifted bubble matches closed form") {
    // grid bulk + analytic far-field tail, Richardson-extrapolated; the closed
    // Gamma-function value only appears here as the expected value.
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        Budget budget{400000000};
        EnergyOracle E = extension_energy_bubble(p, budget);
        const double c2 = dstar_closed(g) * E.value;
        const double expect = cfrac_closed(n, g) * c1_closed(n);
        CHECK(c2 == doctest::Approx(expect).epsilon(1e-3));
        CHECK(E.richardson_gap < 5e-3);
        CHECK(E.tail_fraction > 0.0);
        CHECK(E.tail_fraction < 0.5);
    }
}

TEST_CASE("green constant: flux balance, closed form, and planar flux mass") {
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {2, 0.75}, {3, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        Budget budget{100000000};
        const double ds = dstar_closed(g);
        const double gv = green_constant(p, ds, budget);
        CHECK(gv == doctest::Approx(green_closed(n, g)).epsilon(1e-7));
    }

    // the weighted flux of the singular kernel through any horizontal plane is 1
    FracParams p = make_params(2, 0.25);
    Budget budget{100000000};
    const double ds = dstar_closed(p.gamma);
    const double gv = green_constant(p, ds, budget);
    const double nm2g = p.n - 2.0 * p.gamma;
    for (double y : {0.1, 1.0}) {
        auto flux_density = [&](double r) {
            const double dG =
                gv * (-nm2g) * y * std::pow(y * y + r * r, -0.5 * nm2g - 1.0);
            return -ds * std::pow(y, 1.0 - 2.0 * p.gamma) * dG;
        };
        QuadResult mass =
            integrate_radial(flux_density, p.n, QuadTol{1e-11, 1e-10}, budget, {y});
        REQUIRE(mass.converged);
        CHECK(mass.value == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("green kernel symmetry and pole guard") {
    FracParams p = make_params(3, 0.75);
    const double gv = green_closed(3, 0.75);
    const Vec x = vec(0.2, -0.4, 0.1), xi = vec(-0.3, 0.25, 0.0);
    CHECK(green_flat(p, gv, 0.6, x, xi) == green_flat(p, gv, 0.6, xi, x));
    CHECK_THROWS_AS((void)green_flat(p, gv, 0.0, x, x), std::domain_error);
}

TEST_CASE("green kernel is reproduced from its own boundary trace") {
    // unwindowed: the Poisson integral of g |x|^{2g-n} equals the kernel itself
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        Budget budget{400000000};
        PoissonKernel K(p, budget);
        const double gc = green_closed(n, g);
        auto data = [&](double s) { return gc * std::pow(s, 2.0 * g - p.n); };
        for (auto [y, r] : {std::pair<double, double>{0.5, 0.5}, {0.2, 0.98}}) {
            QuadResult q = extend_radial_convolution(K, data, y, r, 256.0,
                                                     QuadTol{1e-12, 1e-8}, budget, {r});
            REQUIRE(q.converged);
            CHECK(q.value ==
                  doctest::Approx(green_flat(p, gc, y, vec(r), vec(0.0))).epsilon(1e-4));
        }
    }
}

TEST_CASE("annulus-windowed trace still reproduces the kernel to one percent") {
    // smootherstep window supported on [alpha, 2B]; the inner cut removes
    // O(alpha^{2g}) of boundary mass, the outer cut O((rho/B)^{n+2g}).
    auto smoother = [](double t) {
        t = std::clamp(t, 0.0, 1.0);
        return t * t * (3.0 - 2.0 * t);
    };
    const double alpha = 1e-5, B = 64.0;
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        Budget budget{400000000};
        PoissonKernel K(p, budget);
        const double gc = green_closed(n, g);
        auto data = [&](double s) {
            const double w =
                smoother((s - alpha) / alpha) * (1.0 - smoother(s / B - 1.0));
            return w * gc * std::pow(s, 2.0 * g - p.n);
        };
        for (double rho : {0.7, 1.0, 1.5}) {
            for (double deg : {20.0, 45.0}) {
                const double y = rho * std::sin(deg * M_PI / 180.0);
                const double r = rho * std::cos(deg * M_PI / 180.0);
                QuadResult q = extend_radial_convolution(K, data, y, r, 2.0 * B,
                                                         QuadTol{1e-11, 1e-7}, budget, {r});
                REQUIRE(q.converged);
                CHECK(q.value ==
                      doctest::Approx(green_flat(p, gc, y, vec(r), vec(0.0)))
                          .epsilon(1e-2));
            }
        }
    }
}

TEST_CASE("green kernel is discrete-harmonic away from the pole") {
    FracParams p = make_params(2, 0.25);
    const double gc = green_closed(2, 0.25);
    auto fld = [&](const GridSpec& s) {
        return field_from_function(
            [&](double y, double r) {
                return (y == 0.0 && r == 0.0) ? 0.0
                                              : green_flat(p, gc, y, vec(r), vec(0.0));
            },
            p, s);
    };
    const double rc = grid_operator_residual(fld(GridSpec{64, 128, 8, 8}), 1.0);
    const double rf = grid_operator_residual(fld(GridSpec{128, 256, 8, 8}), 1.0);
    CHECK(rf < 1e-5);
    CHECK(rc / rf > 2.5);  // residual refines under grid doubling
}

TEST_CASE("rough derivative bounds hold uniformly across scales") {
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        for (double lam : {1.0, 10.0, 100.0}) {
            Budget budget{600000000};
            RoughEstimateReport R = check_rough_estimates(p, lam, budget);
            CHECK(R.ratio_value <= 5.0);
            CHECK(R.ratio_dy <= 5.0);
            CHECK(R.ratio_dx <= 5.0);
            CHECK(R.ratio_dxx <= 5.0);
            CHECK(R.fd_mismatch <= 5e-2);
            // gradient vanishes at the radial point (identical reduced integrals)
            CHECK(std::abs(R.radial_gradient) <= 1e-12);
            // boundary-layer exponent of the y-derivative
            CHECK(R.dy_slope ==
                  doctest::Approx(2.0 * g - 1.0).epsilon(5e-2));
        }
    }
}

TEST_CASE("sharp leading-term deviations decay with the bubble scale") {
    for (auto [n, g] : {std::pair<int, double>{2, 0.25}, {3, 0.75}}) {
        FracParams p = make_params(n, g);
        double prev_val = 1e300, prev_ydy = 1e300, prev_xdx = 1e300;
        for (double lam : {10.0, 30.0, 100.0}) {
            Budget budget{600000000};
            SharpEstimateReport S = check_sharp_estimates(p, lam, 0.5, budget);
            CHECK(S.dev_value < prev_val);
            CHECK(S.dev_ydy < prev_ydy);
            CHECK(S.dev_xdx < prev_xdx);
            prev_val = S.dev_value;
            prev_ydy = S.dev_ydy;
            prev_xdx = S.dev_xdx;
        }
    }
}

TEST_CASE("far-field value approaches the inverse-power leading term") {
    FracParams p = make_params(2, 0.25);
    Budget budget{200000000};
    PoissonKernel K(p, budget);
    const double lam = 100.0, m = 0.5 * (p.n - 2.0 * p.gamma);
    Bubble b = make_bubble(vec(0, 0), lam);
    // probe at |z| = 1, 45 degrees
    const double y = std::sqrt(0.5), r = std::sqrt(0.5);
    QuadResult q = extend_bubble_convolution(K, b, y, vec(r, 0), QuadTol{1e-13, 1e-9},
                                             budget);
    REQUIRE(q.converged);
    const double lead = std::pow(lam, -m);  // r_a = 1
    CHECK(std::abs(q.value - lead) / lead < 0.25);
}

TEST_CASE("field export round-trips through CSV with a JSON sidecar") {
    FracParams p = make_params(2, 0.75);
    GridSpec spec{8, 12, 2.0, 3.0};
    HalfSpaceField f = field_from_function(
        [](double y, double r) { return 1.0 + y - 0.5 * r; }, p, spec, "closed_form");
    const std::string csv = "test_field_export.csv", json = "test_field_export.json";
    write_halfspace_csv(f, csv, json);

    std::ifstream in(csv);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,r,value");
    int rows = 0;
    double y, r, v;
    char comma;
    std::string line;
    bool all_match = true;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        ls >> y >> comma >> r >> comma >> v;
        all_match = all_match && std::abs(v - (1.0 + y - 0.5 * r)) < 1e-9;
        ++rows;
    }
    CHECK(rows == (spec.y_cells + 1) * (spec.r_cells + 1));
    CHECK(all_match);

    std::ifstream js(json);
    REQUIRE(js.good());
    std::stringstream buf;
    buf << js.rdbuf();
    const std::string side = buf.str();
    CHECK(side.find("\"gamma\": 0.75") != std::string::npos);
    CHECK(side.find("\"provenance\": \"closed_form\"") != std::string::npos);
    std::remove(csv.c_str());
    std::remove(json.c_str());
}

TEST_SUITE_END();
