#include <cmath>

#include "doctest.h"
#include "fracbubble/bubbles.hpp"
#include "fracbubble/frac_laplacian.hpp"

using namespace fracbubble;

TEST_SUITE_BEGIN("frac_laplacian");

namespace {

// cos(k.x) under a smooth radial window: identity inside r < r0, quintic
// smoothstep down to zero at r1. Near the evaluation point (origin) the
// window is identically 1, so the analytic Laplacian -|k|^2 cos is exact
// where the Taylor correction needs it.
ScalarField windowed_cos(Vec k, int n, double r0, double r1) {
    ScalarField f;
    f.value = [k, n, r0, r1](const Vec& x) {
        double r = std::sqrt(norm2(x, n));
        double w = 1.0;
        if (r >= r1) {
            w = 0.0;
        } else if (r > r0) {
            double s = (r - r0) / (r1 - r0);
            w = 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        }
        return w * std::cos(dot(k, x, n));
    };
    double kk = norm2(k, n);
    f.laplacian = [k, n, kk, r0](const Vec& x) {
        double r = std::sqrt(norm2(x, n));
        (void)r0;
        (void)r;
        return -kk * std::cos(dot(k, x, n));  // valid for r < r0 (all uses)
    };
    f.width = 1.0;
    return f;
}

}  // namespace

TEST_CASE("constant field maps to zero") {
    ScalarField f;
    f.value = [](const Vec&) { return 1.0; };
    f.laplacian = [](const Vec&) { return 0.0; };
    f.width = 1.0;
    FracParams p = make_params(2, 0.25);
    Budget b;
    QuadResult q = frac_laplacian_pv(f, vec(0.3, -0.2), p, QuadTol{1e-9, 1e-9}, b);
    CHECK(std::fabs(q.value) < 1e-8);
}

TEST_CASE("Fourier multiplier on a windowed cosine, n=2") {
    // (-Delta)^g cos(k.x) = |k|^{2g} cos(k.x); window far away, corrected by
    // comparing within 1% (the window's far-field contribution is below that
    // for r0 = 64: |deficit| <= C omega sqrt(2/pi) r0^{-1/2-2g} / (1/2+2g)).
    FracParams p = make_params(2, 0.25);
    ScalarField f = windowed_cos(vec(1.0, 0.0), 2, 64.0, 128.0);
    Budget b;
    b.remaining = 40'000'000;
    QuadResult q = frac_laplacian_pv(f, vec(0, 0), p, QuadTol{1e-5, 1e-5}, b);
    CHECK(q.value == doctest::Approx(1.0).epsilon(0.01));

    // oblique wave vector, |k|^2 = 2
    ScalarField f2 = windowed_cos(vec(1.0, 1.0), 2, 64.0, 128.0);
    Budget b2;
    b2.remaining = 40'000'000;
    QuadResult q2 = frac_laplacian_pv(f2, vec(0, 0), p, QuadTol{1e-5, 1e-5}, b2);
    CHECK(q2.value == doctest::Approx(std::pow(2.0, 0.25)).epsilon(0.01));
}

TEST_CASE("Fourier multiplier on a windowed cosine, n=3 and gamma > 1/2") {
    FracParams p = make_params(3, 0.75);
    ScalarField f = windowed_cos(vec(0.0, 1.0, 0.0), 3, 24.0, 48.0);
    Budget b;
    b.remaining = 60'000'000;
    QuadResult q = frac_laplacian_pv(f, vec(0, 0, 0), p, QuadTol{1e-4, 1e-4}, b);
    CHECK(q.value == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("spectral oracle reproduces the multiplier on an exact grid mode") {
    // u = cos(k x1) with k an exact grid frequency: the DFT is a single mode,
    // so the multiplier action is exact up to rounding.
    FracParams p = make_params(2, 0.25);
    const double L = 16.0;
    const double k = 2.0 * M_PI / (2.0 * L) * 8.0;  // 8th mode
    auto u = [k](const Vec& x) { return std::cos(k * x[0]); };
    SpectralValue s = frac_laplacian_spectral(u, vec(0, 0), p, L, 128);
    CHECK(s.value == doctest::Approx(std::pow(k * k, 0.25)).epsilon(1e-10));
    CHECK(s.box_ok == false);  // cosine does not decay; boundary flag trips
}

TEST_CASE("spectral oracle flags decaying fields as box-ok") {
    FracParams p = make_params(2, 0.25);
    Bubble bb = make_bubble(vec(0, 0), 1.0);
    auto u = [&](const Vec& x) { return eval_bubble(bb, x, p); };
    SpectralValue s = frac_laplacian_spectral(u, vec(0, 0), p, 40.0, 256, 5e-2);
    CHECK(s.box_ok);
    CHECK(s.richardson_gap < 1e-2);
}

TEST_CASE("PV and spectral oracles agree on the bubble at the origin") {
    for (double g : {0.25, 0.75}) {
        FracParams p = make_params(2, g);
        Bubble bb = make_bubble(vec(0, 0), 1.0);
        ScalarField f = bubble_field(bb, p);
        Budget b;
        QuadResult pv = frac_laplacian_pv(f, vec(0, 0), p, QuadTol{1e-8, 1e-8}, b);
        auto u = [&](const Vec& x) { return eval_bubble(bb, x, p); };
        SpectralValue s = frac_laplacian_spectral(u, vec(0, 0), p, 40.0, 512, 5e-2);
        CHECK(pv.converged);
        INFO("gamma = ", g);
        CHECK(s.value == doctest::Approx(pv.value).epsilon(1e-3));
    }
}

TEST_CASE("PV linearity and translation covariance") {
    FracParams p = make_params(2, 0.25);
    Bubble b1 = make_bubble(vec(0, 0), 1.0);
    Bubble b2 = make_bubble(vec(0, 0), 2.0);

    ScalarField f1 = bubble_field(b1, p);
    ScalarField f2 = bubble_field(b2, p);
    ScalarField sum;
    sum.value = [&](const Vec& x) { return 2.0 * f1.value(x) - 0.5 * f2.value(x); };
    sum.laplacian = [&](const Vec& x) {
        return 2.0 * f1.laplacian(x) - 0.5 * f2.laplacian(x);
    };
    sum.width = 0.5;
    sum.features = {vec(0, 0)};

    Vec x = vec(0.7, -0.1);
    Budget ba, bb_, bc;
    double lhs = frac_laplacian_pv(sum, x, p, QuadTol{1e-9, 1e-9}, ba).value;
    double r1 = frac_laplacian_pv(f1, x, p, QuadTol{1e-9, 1e-9}, bb_).value;
    double r2 = frac_laplacian_pv(f2, x, p, QuadTol{1e-9, 1e-9}, bc).value;
    CHECK(lhs == doctest::Approx(2.0 * r1 - 0.5 * r2).epsilon(1e-6));

    // translation: shifted bubble evaluated at shifted point
    Bubble bt = make_bubble(vec(1.5, 2.0), 1.0);
    ScalarField ft = bubble_field(bt, p);
    Budget bd, be;
    double v0 = frac_laplacian_pv(f1, vec(1.0, 0.0), p, QuadTol{1e-9, 1e-9}, bd).value;
    double vt = frac_laplacian_pv(ft, vec(2.5, 2.0), p, QuadTol{1e-9, 1e-9}, be).value;
    CHECK(vt == doctest::Approx(v0).epsilon(1e-7));
}

TEST_CASE("PV scaling covariance") {
    // (-Delta)^g [u(lam .)](x) = lam^{2g} ((-Delta)^g u)(lam x); the bubble
    // family implements delta_{0,lam}(x) = lam^{(n-2g)/2} delta_{0,1}(lam x).
    FracParams p = make_params(2, 0.25);
    const double lam = 4.0;
    Bubble unit = make_bubble(vec(0, 0), 1.0);
    Bubble scaled = make_bubble(vec(0, 0), lam);
    Budget b1, b2;
    Vec x = vec(0.5, 0.0);
    Vec xs = scale(x, 1.0 / lam);
    double vu = frac_laplacian_pv(bubble_field(unit, p), x, p, QuadTol{1e-9, 1e-9}, b1).value;
    double vs = frac_laplacian_pv(bubble_field(scaled, p), xs, p, QuadTol{1e-9, 1e-9}, b2).value;
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    CHECK(vs == doctest::Approx(std::pow(lam, m + 2.0 * p.gamma) * vu).epsilon(1e-6));
}

TEST_SUITE_END();
