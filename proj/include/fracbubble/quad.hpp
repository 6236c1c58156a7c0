#pragma once

#include <functional>
#include <vector>

#include "fracbubble/params.hpp"

namespace fracbubble {

// Outcome of one quadrature call. converged == false means the evaluation
// budget ran out before the tolerance was met; the partial value and the
// error estimate are still reported, never silently accepted.
struct QuadResult {
    double value = 0.0;
    double err_estimate = 0.0;
    long long n_evals = 0;
    bool converged = true;
};

// Shared evaluation budget. One instance per top-level oracle call; nested
// integrals draw from the same pool.
struct Budget {
    long long remaining = 10'000'000;
    long long used = 0;
    bool take(long long k = 1) {
        used += k;
        if (remaining < k) { remaining = 0; return false; }
        remaining -= k;
        return true;
    }
    bool ok() const { return remaining > 0; }
};

// Default per-oracle budget; FRACBUBBLE_BUDGET (integer) overrides.
long long default_budget();

struct QuadTol {
    double abs = 1e-10;
    double rel = 1e-8;
};

// Adaptive Gauss7/Kronrod15 on [a,b]. split_hints pre-splits the initial
// interval at the given interior points (deterministic refinement order:
// largest error first, ties by left endpoint).
QuadResult gk_adaptive(const std::function<double(double)>& f, double a, double b,
                       QuadTol tol, Budget& budget,
                       const std::vector<double>& split_hints = {});

// integral over R^n of f, by the per-axis compactification x_i = tan(theta_i)
// and nested adaptive panels (innermost axis last). decay_q declares
// |f| <= C (1+|x|)^{-decay_q}; values <= n are rejected (not integrable).
// hints: per-axis x-coordinates of sharp features (e.g. bubble centers).
QuadResult integrate_rn(const std::function<double(const Vec&)>& f, int n,
                        double decay_q, QuadTol tol, Budget& budget,
                        const std::vector<std::vector<double>>& hints = {});

// omega_{n-1} * integral_0^inf g(r) r^{n-1} dr, with r = tan(theta).
// Fast path for radially symmetric integrands about the origin.
QuadResult integrate_radial(const std::function<double(double)>& g, int n,
                            QuadTol tol, Budget& budget,
                            const std::vector<double>& hints_r = {});

// Reduction of an R^n integral (n >= 2) whose integrand depends only on the
// coordinate t along a fixed axis and the transverse radius rho:
//   sphere_area(n-1) * int_R int_0^inf rho^{n-2} f(t, rho) drho dt.
// Both axes are tan-compactified; feature lists are in (t, rho) coordinates.
QuadResult integrate_cylinder(const std::function<double(double, double)>& f, int n,
                              QuadTol tol, Budget& budget,
                              const std::vector<double>& t_features = {},
                              const std::vector<double>& rho_features = {});

// Map feature coordinates into the tan-compactified angle variable, keeping
// only hints strictly inside (lo, hi). Helper for gk_adaptive split hints.
std::vector<double> atan_hints(const std::vector<double>& xs, double lo, double hi);

// Weighted half-space integral int_0^Y y^{1-2g} int f dx dy over a box
// [-R,R]^n in x. The graded substitution t = y^(2-2g) absorbs the weight
// exactly, so f only needs f = O(y^s) with s > 2g - 2 near y = 0.
QuadResult integrate_halfspace_weighted(const std::function<double(double, const Vec&)>& f,
                                        const FracParams& p, double Y, double R,
                                        QuadTol tol, Budget& budget,
                                        const std::vector<double>& hints_y = {},
                                        const std::vector<std::vector<double>>& hints_x = {});

// Radial flavor: int_0^Y y^{1-2g} int_0^R f(y,r) omega_{n-1} r^{n-1} dr dy.
QuadResult integrate_halfspace_weighted_radial(const std::function<double(double, double)>& f,
                                               const FracParams& p, double Y, double R,
                                               QuadTol tol, Budget& budget,
                                               const std::vector<double>& hints_y = {},
                                               const std::vector<double>& hints_r = {});

// Surface area of S^{n-1} in R^n (geometry factor, n = 1 gives 2).
double sphere_area(int n);

}  // namespace fracbubble
