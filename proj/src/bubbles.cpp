#include "fracbubble/bubbles.hpp"

#include <cmath>

namespace fracbubble {

double eval_bubble(const Bubble& b, const Vec& x, const FracParams& p) {
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    const double s2 = norm2(sub(x, b.center), p.n);
    return std::pow(b.scale / (1.0 + b.scale * b.scale * s2), m);
}

double bubble_laplacian(const Bubble& b, const Vec& x, const FracParams& p) {
    // u(s) = lam^m (1+lam^2 s^2)^{-m}, m = (n-2g)/2; Delta = u'' + (n-1)u'/s.
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    const double lam2 = b.scale * b.scale;
    const double s2 = norm2(sub(x, b.center), p.n);
    const double q = 1.0 + lam2 * s2;
    const double base = std::pow(b.scale, m);
    // u' / s = -2 m lam^2 (1+lam^2 s^2)^{-m-1} * base
    // u''    = -2 m lam^2 base [ (1+lam^2 s^2)^{-m-1} - 2(m+1) lam^2 s^2 (1+lam^2 s^2)^{-m-2} ]
    const double t1 = std::pow(q, -m - 1.0);
    const double t2 = std::pow(q, -m - 2.0);
    return -2.0 * m * lam2 * base * (p.n * t1 - 2.0 * (m + 1.0) * lam2 * s2 * t2);
}

ScalarField bubble_field(const Bubble& b, const FracParams& p) {
    ScalarField f;
    f.value = [b, p](const Vec& x) { return eval_bubble(b, x, p); };
    f.laplacian = [b, p](const Vec& x) { return bubble_laplacian(b, x, p); };
    f.width = 1.0 / b.scale;
    f.features = {b.center};
    return f;
}

std::vector<double> pde_stencil_offsets() { return {0.0, 0.5, 1.0, 2.0, 3.0}; }

PdeResidual bubble_pde_residual(const Bubble& b, const FracParams& p,
                                QuadTol tol, Budget& budget) {
    PdeResidual out;
    ScalarField f = bubble_field(b, p);
    for (double off : pde_stencil_offsets()) {
        Vec x = b.center;
        x[0] += off / b.scale;
        QuadResult q = frac_laplacian_pv(f, x, p, tol, budget);
        const double d = eval_bubble(b, x, p);
        const double ratio = q.value / std::pow(d, p.critical_exponent);
        out.ratios.push_back(ratio);
        out.pv_errors.push_back(q.err_estimate);
        out.converged = out.converged && q.converged;
    }
    double sum = 0.0;
    for (double r : out.ratios) sum += r;
    out.mean_ratio = sum / static_cast<double>(out.ratios.size());
    for (double r : out.ratios)
        out.max_rel_dev = std::max(out.max_rel_dev,
                                   std::fabs(r - out.mean_ratio) / std::fabs(out.mean_ratio));
    return out;
}

QuadResult c1_oracle(const FracParams& p, QuadTol tol, Budget& budget) {
    const int n = p.n;
    return integrate_radial([n](double r) { return std::pow(1.0 + r * r, -n); },
                            n, tol, budget);
}

QuadResult c3_oracle(const FracParams& p, QuadTol tol, Budget& budget) {
    const double e = 0.5 * (p.n + 2.0 * p.gamma);
    return integrate_radial([e](double r) { return std::pow(1.0 + r * r, -e); },
                            p.n, tol, budget);
}

}  // namespace fracbubble
