#include "fracbubble/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>

#include "fracbubble/bubbles.hpp"

namespace fracbubble {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sq(double v) { return v * v; }

// Everything the closed forms need about one pair.
struct PairGeometry {
    double li = 1.0, lj = 1.0;  // scales
    double d = 0.0;             // center separation
    double m = 0.0;             // (n - 2g)/2
    double S = 2.0;             // coupling argument
    double eps = 0.0;           // S^{-m}
    double q = 1.0;             // min scale ratio
};

PairGeometry pair_geometry(const Bubble& bi, const Bubble& bj, const FracParams& p) {
    PairGeometry g;
    g.li = bi.scale;
    g.lj = bj.scale;
    g.d = std::sqrt(norm2(sub(bi.center, bj.center), p.n));
    g.m = 0.5 * (p.n - 2.0 * p.gamma);
    g.S = g.li / g.lj + g.lj / g.li + g.li * g.lj * sq(g.d);
    g.eps = std::pow(g.S, -g.m);
    g.q = std::min(g.li / g.lj, g.lj / g.li);
    return g;
}

// Least-squares slope of ys against xs.
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double k = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += sq(xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return sxy / sxx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed-form pair quantities
// ---------------------------------------------------------------------------

double pair_coupling(const Bubble& bi, const Bubble& bj, int n) {
    const double d2 = norm2(sub(bi.center, bj.center), n);
    return bi.scale / bj.scale + bj.scale / bi.scale + bi.scale * bj.scale * d2;
}

double epsilon_ij(const Bubble& bi, const Bubble& bj, const FracParams& p) {
    return std::pow(pair_coupling(bi, bj, p.n), -0.5 * (p.n - 2.0 * p.gamma));
}

double pair_scale_ratio(const Bubble& bi, const Bubble& bj) {
    return std::min(bi.scale / bj.scale, bj.scale / bi.scale);
}

AsymptoticTerm interaction_asymptotic(const Bubble& bi, const Bubble& bj,
                                      const FracParams& p, InteractionOrder order,
                                      double c3) {
    const PairGeometry g = pair_geometry(bi, bj, p);
    const double Sm1 = std::pow(g.S, -g.m - 1.0);
    const double base = -2.0 * g.m * c3 * g.li * g.lj * Sm1;

    AsymptoticTerm out;
    switch (order) {
        case InteractionOrder::value:
            out.value = c3 * g.eps;
            break;
        case InteractionOrder::dlambda_i:
            out.value = -g.m * c3 * Sm1 * (g.li / g.lj - g.lj / g.li + g.li * g.lj * sq(g.d));
            break;
        case InteractionOrder::dlambda_j:
            out.value = -g.m * c3 * Sm1 * (g.lj / g.li - g.li / g.lj + g.li * g.lj * sq(g.d));
            break;
        case InteractionOrder::grad_a:
            out.value = base * g.d;
            break;
        case InteractionOrder::hess_long:
            out.value = base * (1.0 - 2.0 * (g.m + 1.0) * g.li * g.lj * sq(g.d) / g.S);
            break;
        case InteractionOrder::hess_trans:
            out.value = base;
            break;
    }

    const double n = p.n;
    const double n2g = n - 2.0 * p.gamma;
    double scale = std::pow(g.q, p.gamma);
    switch (order) {
        case InteractionOrder::value:
        case InteractionOrder::dlambda_i:
        case InteractionOrder::dlambda_j:
            scale *= std::pow(g.eps, n / n2g);
            break;
        case InteractionOrder::grad_a:
            scale *= std::sqrt(g.li * g.lj) * std::pow(g.eps, (n + 1.0) / n2g);
            break;
        case InteractionOrder::hess_long:
        case InteractionOrder::hess_trans:
            scale *= g.li * g.lj * std::pow(g.eps, (n + 2.0) / n2g);
            break;
    }
    out.error_scale = scale;
    return out;
}

Vec interaction_grad_leading(const Bubble& bi, const Bubble& bj,
                             const FracParams& p, double c3) {
    const PairGeometry g = pair_geometry(bi, bj, p);
    const double coef = -2.0 * g.m * c3 * g.li * g.lj * std::pow(g.S, -g.m - 1.0);
    Vec out = scale(sub(bi.center, bj.center), coef);
    for (int k = p.n; k < 3; ++k) out[k] = 0.0;
    return out;
}

std::array<double, 9> interaction_hess_leading(const Bubble& bi, const Bubble& bj,
                                               const FracParams& p, double c3) {
    const PairGeometry g = pair_geometry(bi, bj, p);
    const double base = -2.0 * g.m * c3 * g.li * g.lj * std::pow(g.S, -g.m - 1.0);
    const Vec delta = sub(bi.center, bj.center);
    std::array<double, 9> h{};
    for (int r = 0; r < p.n; ++r)
        for (int c = 0; c < p.n; ++c) {
            const double proj = 2.0 * (g.m + 1.0) * g.li * g.lj * delta[r] * delta[c] / g.S;
            h[3 * r + c] = base * ((r == c ? 1.0 : 0.0) - proj);
        }
    return h;
}

// ---------------------------------------------------------------------------
// Quadrature oracles
// ---------------------------------------------------------------------------

QuadResult pair_power_integral(const Bubble& bi, const Bubble& bj, double alpha,
                               double beta, const FracParams& p, QuadTol tol,
                               Budget& budget) {
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    if (!(m * (alpha + beta) > 0.5 * p.n))
        throw std::invalid_argument("pair_power_integral: exponents not integrable");

    const double li = bi.scale, lj = bj.scale;
    const double d = std::sqrt(norm2(sub(bi.center, bj.center), p.n));
    const double ma = m * alpha, mb = m * beta;
    const double pref = std::pow(li, ma) * std::pow(lj, mb);
    auto gi = [&](double s) { return std::pow(1.0 + sq(li * s), -ma); };
    auto gj = [&](double s) { return std::pow(1.0 + sq(lj * s), -mb); };
    // Ask the reduced integral for the target accuracy of the prefactor-free
    // value so the final product meets `tol` after rescaling.
    QuadTol rtol{tol.abs / std::max(pref, 1e-300), tol.rel};

    QuadResult out;
    if (p.n >= 2 && d < 1e-14) {
        auto g = [&](double s) { return gi(s) * gj(s); };
        out = integrate_radial(g, p.n, rtol, budget, {1.0 / li, 1.0 / lj});
    } else if (p.n == 1) {
        auto f = [&](double theta) {
            const double t = std::tan(theta);
            const double wt = 1.0 + t * t;
            return wt * gi(std::abs(t)) * gj(std::abs(t - d));
        };
        const long long used0 = budget.used;
        out = gk_adaptive(f, -0.5 * kPi, 0.5 * kPi, rtol, budget,
                          atan_hints({-1.0 / li, 0.0, 1.0 / li, d - 1.0 / lj, d, d + 1.0 / lj},
                                     -0.5 * kPi, 0.5 * kPi));
        out.n_evals = budget.used - used0;
    } else {
        auto f = [&](double t, double rho) {
            return gi(std::hypot(t, rho)) * gj(std::hypot(t - d, rho));
        };
        out = integrate_cylinder(f, p.n, rtol, budget,
                                {-1.0 / li, 0.0, 1.0 / li, d - 1.0 / lj, d, d + 1.0 / lj},
                                {1.0 / li, 1.0 / lj});
    }
    out.value *= pref;
    out.err_estimate *= pref;
    return out;
}

QuadResult interaction_oracle(const Bubble& bi, const Bubble& bj,
                              const FracParams& p, QuadTol tol, Budget& budget) {
    return pair_power_integral(bi, bj, p.critical_exponent, 1.0, p, tol, budget);
}

QuadResult higher_interaction_oracle(const Bubble& bi, const Bubble& bj,
                                     double alpha, double beta,
                                     const FracParams& p, QuadTol tol,
                                     Budget& budget) {
    const double total = 2.0 * p.n / (p.n - 2.0 * p.gamma);
    const double crit = 0.5 * total;  // n/(n-2g)
    if (std::abs(alpha + beta - total) > 1e-9 * total)
        throw std::invalid_argument(
            "higher_interaction_oracle: alpha + beta must equal 2n/(n-2g)");
    const bool balanced = std::abs(alpha - beta) <= 1e-12 * total;
    const bool unbalanced = alpha > crit + 1e-12 && beta > 1e-12 && beta < crit - 1e-12;
    if (!balanced && !unbalanced)
        throw std::invalid_argument(
            "higher_interaction_oracle: need alpha > n/(n-2g) > beta > 0 or alpha = beta");
    return pair_power_integral(bi, bj, alpha, beta, p, tol, budget);
}

// ---------------------------------------------------------------------------
// Leading-term verification
// ---------------------------------------------------------------------------

InteractionReport verify_interaction(const Bubble& bi, const Bubble& bj,
                                     const FracParams& p, InteractionOrder order,
                                     double c3, QuadTol tol, Budget& budget) {
    const PairGeometry g = pair_geometry(bi, bj, p);

    InteractionReport rep;
    rep.lambda_i = g.li;
    rep.lambda_j = g.lj;
    rep.sep = g.d;
    rep.eps = g.eps;
    rep.q = g.q;

    const AsymptoticTerm at = interaction_asymptotic(bi, bj, p, order, c3);
    rep.asymptotic = at.value;
    rep.error_scale = at.error_scale;

    // The oracle depends on the pair only through (li, lj, |ai - aj|), so the
    // derivative probes move those three coordinates directly.
    bool all_ok = true;
    auto I = [&](double si, double sj, double dd) {
        const Bubble ci = make_bubble(vec(0.0, 0.0, 0.0), si);
        const Bubble cj = make_bubble(vec(std::abs(dd), 0.0, 0.0), sj);
        QuadResult r = interaction_oracle(ci, cj, p, tol, budget);
        if (!r.converged) all_ok = false;
        return std::pair<double, double>{r.value, r.err_estimate};
    };

    switch (order) {
        case InteractionOrder::value: {
            auto [v, e] = I(g.li, g.lj, g.d);
            rep.oracle = v;
            rep.oracle_error = e;
            break;
        }
        case InteractionOrder::dlambda_i:
        case InteractionOrder::dlambda_j: {
            const bool on_i = order == InteractionOrder::dlambda_i;
            const double h = 1e-3;  // step in log lambda
            auto D = [&](double s) {
                const double f = std::exp(s);
                const double vp = I(on_i ? g.li * f : g.li, on_i ? g.lj : g.lj * f, g.d).first;
                const double vm = I(on_i ? g.li / f : g.li, on_i ? g.lj : g.lj / f, g.d).first;
                return (vp - vm) / (2.0 * s);
            };
            const double d1 = D(h);
            const double d2 = D(2.0 * h);
            rep.oracle = d1 + (d1 - d2) / 3.0;
            // The step-halving difference carries both the truncation term and
            // the quadrature noise as they actually materialize; propagated
            // per-integral error estimates overstate the noise by orders of
            // magnitude and are not used.
            rep.oracle_error = std::abs(d1 - d2);
            break;
        }
        case InteractionOrder::grad_a: {
            const double h = 1e-3 / std::sqrt(g.li * g.lj);  // step in the center
            auto D = [&](double s) {
                const double vp = I(g.li, g.lj, g.d + s).first;
                const double vm = I(g.li, g.lj, g.d - s).first;
                return (vp - vm) / (2.0 * s);
            };
            const double d1 = D(h);
            const double d2 = D(2.0 * h);
            rep.oracle = d1 + (d1 - d2) / 3.0;
            rep.oracle_error = std::abs(d1 - d2);
            break;
        }
        case InteractionOrder::hess_long:
        case InteractionOrder::hess_trans: {
            // Second differences need steps resolved against the local
            // variation scale, not the bare 1/lambda, or the difference
            // drowns in quadrature noise at wide separations.
            const double h = 1e-2 * std::max(g.d, 1.0 / std::sqrt(g.li * g.lj));
            const double v0 = I(g.li, g.lj, g.d).first;
            auto D = [&](double s) {
                if (order == InteractionOrder::hess_long) {
                    const double vp = I(g.li, g.lj, g.d + s).first;
                    const double vm = I(g.li, g.lj, g.d - s).first;
                    return (vp - 2.0 * v0 + vm) / sq(s);
                }
                const double vp = I(g.li, g.lj, std::hypot(g.d, s)).first;
                return 2.0 * (vp - v0) / sq(s);
            };
            // Two-level extrapolation in the step: the leading h^2 and h^4
            // truncation terms both cancel, and the surviving level gap is an
            // honest measurement of truncation plus quadrature noise.
            const double dh = D(h);
            const double dh2 = D(0.5 * h);
            const double dh4 = D(0.25 * h);
            const double r1a = dh2 + (dh2 - dh) / 3.0;
            const double r1b = dh4 + (dh4 - dh2) / 3.0;
            rep.oracle = r1b + (r1b - r1a) / 15.0;
            rep.oracle_error = std::abs(r1b - r1a);
            break;
        }
    }

    rep.gap = std::abs(rep.oracle - rep.asymptotic);
    rep.gap_ratio = rep.gap / rep.error_scale;
    rep.fd_ok = all_ok &&
                rep.oracle_error <= std::max(0.05 * rep.gap, 1e-4 * rep.error_scale);
    return rep;
}

// ---------------------------------------------------------------------------
// Regime sweeps
// ---------------------------------------------------------------------------

SweepFit interaction_sweep(InteractionOrder order, SweepRegime regime,
                           const FracParams& p, double c3, QuadTol tol) {
    struct Config {
        double li, lj, d;
    };
    std::vector<Config> cfgs;
    const bool hess_order = order == InteractionOrder::hess_long ||
                            order == InteractionOrder::hess_trans;
    if (regime == SweepRegime::lambda_ratio) {
        // Center-sensitive orders need a nonzero separation or their leading
        // term vanishes identically; keep it subdominant to the scale ratio.
        const bool center_order = hess_order || order == InteractionOrder::grad_a;
        const double d = center_order ? 0.45 : 0.0;
        // Second derivatives pass through a pre-asymptotic sign trade between
        // error components around moderate scale ratios; start their sweep
        // past it so the fit sees the settled decay.
        if (hess_order)
            for (double L : {100.0, 300.0, 1000.0, 3000.0}) cfgs.push_back({L, 1.0, d});
        else
            for (double L : {10.0, 30.0, 100.0, 300.0}) cfgs.push_back({L, 1.0, d});
    } else {
        for (double d : {4.0, 8.0, 16.0, 32.0}) cfgs.push_back({1.0, 1.0, d});
    }

    // Deep-lambda second differences sit close to the quadrature noise floor;
    // resolve their probes harder than the caller asked.
    const QuadTol ptol = hess_order ? QuadTol{std::min(tol.abs, 1e-13), std::min(tol.rel, 1e-11)}
                                    : tol;

    std::vector<std::future<InteractionReport>> futs;
    futs.reserve(cfgs.size());
    for (const Config& c : cfgs)
        futs.push_back(std::async(std::launch::async, [=]() {
            Budget budget{default_budget()};
            const Bubble bi = make_bubble(vec(0.0, 0.0, 0.0), c.li);
            const Bubble bj = make_bubble(vec(c.d, 0.0, 0.0), c.lj);
            return verify_interaction(bi, bj, p, order, c3, ptol, budget);
        }));

    SweepFit fit;
    fit.points.reserve(cfgs.size());
    for (auto& f : futs) fit.points.push_back(f.get());

    std::vector<double> lx, ly, lp;
    for (const InteractionReport& r : fit.points) {
        fit.max_gap_ratio = std::max(fit.max_gap_ratio, r.gap_ratio);
        fit.fd_ok = fit.fd_ok && r.fd_ok;
        if (r.gap > 0.0) {
            lx.push_back(std::log(r.eps));
            ly.push_back(std::log(r.gap));
            lp.push_back(std::log(r.error_scale));
        }
    }
    if (lx.size() >= 2) {
        fit.observed_exponent = ls_slope(lx, ly);
        fit.predicted_exponent = ls_slope(lx, lp);
    }
    return fit;
}

void write_interaction_csv(const std::vector<InteractionReport>& points,
                           std::ostream& os) {
    os << "lambda_i,lambda_j,sep,eps,oracle,asymptotic,gap,gap_ratio\n";
    char line[256];
    for (const InteractionReport& r : points) {
        std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      r.lambda_i, r.lambda_j, r.sep, r.eps, r.oracle, r.asymptotic,
                      r.gap, r.gap_ratio);
        os << line;
    }
}

// ---------------------------------------------------------------------------
// Self-contained identity checks
// ---------------------------------------------------------------------------

InteractionIdentityReport interaction_identity_checks(const FracParams& p, QuadTol tol,
                                                      Budget& budget, int trials,
                                                      unsigned seed) {
    InteractionIdentityReport rep;
    const double g2 = 2.0 * p.gamma;

    // Scale-derivative coefficient, two ways.
    {
        const double expo = -0.5 * (p.n + g2);
        auto mass = [&](double s) { return std::pow(1.0 + s * s, expo); };
        auto moment = [&](double s) {
            const double q = 1.0 + s * s;
            return std::pow(q, expo) * (s * s - 1.0) / q;
        };
        QuadResult r1 = integrate_radial(mass, p.n, tol, budget, {1.0});
        QuadResult r2 = integrate_radial(moment, p.n, tol, budget, {1.0});
        rep.coeff_from_mass = 0.5 * (p.n - g2) * r1.value;
        rep.coeff_from_moment = 0.5 * (p.n + g2) * r2.value;
        rep.coeff_rel_gap = std::abs(rep.coeff_from_mass - rep.coeff_from_moment) /
                            std::abs(rep.coeff_from_mass);
        rep.converged = rep.converged && r1.converged && r2.converged;
    }

    // Vanishing second-moment combination of the critical kernel family.
    {
        const double coef = p.n + 2.0 - g2;
        const double expo = -0.5 * (p.n + 4.0 - g2);
        QuadResult r;
        if (p.n == 1) {
            auto f = [&](double theta) {
                const double t = std::tan(theta);
                const double wt = 1.0 + t * t;
                const double q = 1.0 + t * t;
                return wt * (q - coef * t * t) * std::pow(q, expo);
            };
            r = gk_adaptive(f, -0.5 * kPi, 0.5 * kPi, tol, budget, atan_hints({-1.0, 0.0, 1.0}, -0.5 * kPi, 0.5 * kPi));
        } else {
            // The x_k^2 factor averages to r^2/n over spheres, so the full
            // moment collapses to one radial integral. The tail decays only
            // like r^(2g-3) near the high end of the trace-weight range; the
            // planar cylinder form cannot resolve that cancellation within a
            // practical budget, the radial form can.
            auto f = [&](double s) {
                const double s2 = s * s;
                return (1.0 + s2 * (1.0 - coef / p.n)) * std::pow(1.0 + s2, expo);
            };
            r = integrate_radial(f, p.n, tol, budget, {1.0});
        }
        rep.vanishing_moment = r.value;
        rep.converged = rep.converged && r.converged;
    }

    // Coupling dichotomy over randomized pairs. 2*max(u,v) is exact in
    // floating point and the rounded sum u+v never exceeds it.
    {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> ulog(-std::log(10.0), std::log(10.0));
        std::uniform_real_distribution<double> upos(-5.0, 5.0);
        rep.dichotomy_trials = trials;
        for (int t = 0; t < trials; ++t) {
            const double li = std::exp(ulog(rng));
            const double lj = std::exp(ulog(rng));
            Vec ai = vec(), aj = vec();
            for (int k = 0; k < p.n; ++k) {
                ai[k] = upos(rng);
                aj[k] = upos(rng);
            }
            const double u = li / lj + lj / li;
            const double v = li * lj * norm2(sub(ai, aj), p.n);
            if (2.0 * std::max(u, v) < u + v) ++rep.dichotomy_failures;
        }
    }

    return rep;
}

}  // namespace fracbubble
