#include <cmath>
#include <random>

#include "doctest.h"
#include "fracbubble/bubbles.hpp"

using namespace fracbubble;

TEST_SUITE_BEGIN("bubbles");

TEST_CASE("pointwise values") {
    FracParams p = make_params(2, 0.25);
    Bubble b1 = make_bubble(vec(0, 0), 1.0);
    // (1/2)^{0.75} at |x| = 1
    CHECK(eval_bubble(b1, vec(1, 0), p) ==
          doctest::Approx(std::pow(0.5, 0.75)).epsilon(1e-14));
    CHECK(eval_bubble(b1, vec(0, 0), p) == doctest::Approx(1.0).epsilon(1e-14));

    // scaling: delta_{a,lam}(a + s/lam) = lam^{(n-2g)/2} delta_{0,1}(s)
    Bubble b4 = make_bubble(vec(2, -1), 4.0);
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    CHECK(eval_bubble(b4, vec(2.25, -1), p) ==
          doctest::Approx(std::pow(4.0, m) * eval_bubble(b1, vec(1, 0), p)).epsilon(1e-14));
}

TEST_CASE("decay exponent at infinity") {
    FracParams p = make_params(3, 0.75);
    Bubble b = make_bubble(vec(0, 0, 0), 1.0);
    // delta ~ lam^{-(n-2g)/2} |x|^{-(n-2g)}: slope of log(delta) vs log r
    double r1 = 100.0, r2 = 1000.0;
    double v1 = eval_bubble(b, vec(r1, 0, 0), p);
    double v2 = eval_bubble(b, vec(r2, 0, 0), p);
    double slope = (std::log(v2) - std::log(v1)) / (std::log(r2) - std::log(r1));
    CHECK(slope == doctest::Approx(-(p.n - 2.0 * p.gamma)).epsilon(1e-4));
}

TEST_CASE("analytic Laplacian matches finite differences") {
    FracParams p = make_params(2, 0.25);
    Bubble b = make_bubble(vec(0.5, -0.3), 2.0);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int t = 0; t < 10; ++t) {
        Vec x = vec(U(rng), U(rng));
        const double h = 1e-5;
        double fd = 0.0;
        for (int c = 0; c < 2; ++c) {
            Vec a = x, d = x;
            a[c] += h;
            d[c] -= h;
            fd += (eval_bubble(b, a, p) - 2.0 * eval_bubble(b, x, p) + eval_bubble(b, d, p)) / (h * h);
        }
        CHECK(bubble_laplacian(b, x, p) == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("PDE ratio is constant on the stencil (reference bubble)") {
    FracParams p = make_params(2, 0.25);
    Budget b;
    PdeResidual r = bubble_pde_residual(make_bubble(vec(0, 0), 1.0), p,
                                        QuadTol{1e-9, 1e-9}, b);
    CHECK(r.converged);
    CHECK(r.ratios.size() == 5);
    CHECK(r.max_rel_dev < 1e-3);
    // cross-check against the closed Gamma-function value (test-only oracle)
    const double closed = std::pow(2.0, 2.0 * p.gamma) *
                          std::exp(std::lgamma(0.5 * p.n + p.gamma) -
                                   std::lgamma(0.5 * p.n - p.gamma));
    CHECK(r.mean_ratio == doctest::Approx(closed).epsilon(1e-4));
}

TEST_CASE("PDE ratio is invariant under translation and scaling") {
    FracParams p = make_params(2, 0.75);
    Budget b1, b2;
    PdeResidual r1 = bubble_pde_residual(make_bubble(vec(0, 0), 1.0), p,
                                         QuadTol{1e-8, 1e-8}, b1);
    PdeResidual r2 = bubble_pde_residual(make_bubble(vec(1.5, -2.0), 4.0), p,
                                         QuadTol{1e-8, 1e-8}, b2);
    CHECK(r1.mean_ratio == doctest::Approx(r2.mean_ratio).epsilon(1e-4));
    CHECK(r2.max_rel_dev < 1e-3);
}

TEST_CASE("volume and kernel constants, closed-form cross-checks") {
    // c1 = pi^{n/2} Gamma(n/2) / Gamma(n); c3 = pi^{n/2} Gamma(g) / Gamma(n/2+g)
    // (test-only oracles; the library value is the quadrature)
    for (int n : {1, 2, 3}) {
        for (double g : {0.25, 0.4}) {
            FracParams p = make_params(n, g);
            Budget b1, b2;
            QuadResult c1 = c1_oracle(p, QuadTol{1e-10, 1e-10}, b1);
            QuadResult c3 = c3_oracle(p, QuadTol{1e-10, 1e-10}, b2);
            const double c1_closed =
                std::pow(M_PI, 0.5 * n) * std::exp(std::lgamma(0.5 * n) - std::lgamma(n));
            const double c3_closed =
                std::pow(M_PI, 0.5 * n) * std::exp(std::lgamma(g) - std::lgamma(0.5 * n + g));
            INFO("n = ", n, " gamma = ", g);
            CHECK(c1.value == doctest::Approx(c1_closed).epsilon(1e-8));
            CHECK(c3.value == doctest::Approx(c3_closed).epsilon(1e-8));
        }
    }
}

TEST_CASE("named special values") {
    FracParams p2 = make_params(2, 0.25);
    Budget b1, b2, b3;
    CHECK(c1_oracle(p2, QuadTol{1e-10, 1e-10}, b1).value ==
          doctest::Approx(M_PI).epsilon(1e-8));
    CHECK(c3_oracle(p2, QuadTol{1e-10, 1e-10}, b2).value ==
          doctest::Approx(4.0 * M_PI).epsilon(1e-8));
    FracParams p3 = make_params(3, 0.5);
    CHECK(c3_oracle(p3, QuadTol{1e-10, 1e-10}, b3).value ==
          doctest::Approx(M_PI * M_PI).epsilon(1e-8));
}

TEST_CASE("kernel constant decreases in gamma") {
    // faster kernel decay for larger gamma, so the mass shrinks
    double prev = -1.0;
    for (double g : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        FracParams p = make_params(2, g);
        Budget b;
        double v = c3_oracle(p, QuadTol{1e-9, 1e-9}, b).value;
        if (prev > 0.0) CHECK(v < prev);
        prev = v;
    }
}

TEST_SUITE_END();
