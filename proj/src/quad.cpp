#include "fracbubble/quad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <queue>
#include <string>

namespace fracbubble {

long long default_budget() {
    static const long long cached = [] {
        if (const char* s = std::getenv("FRACBUBBLE_BUDGET")) {
            char* end = nullptr;
            long long v = std::strtoll(s, &end, 10);
            if (end != s && v > 0) return v;
        }
        return 10'000'000LL;
    }();
    return cached;
}

double sphere_area(int n) {
    // 2 pi^{n/2} / Gamma(n/2); n = 1 is the two-point "sphere".
    switch (n) {
        case 1: return 2.0;
        case 2: return 2.0 * M_PI;
        case 3: return 4.0 * M_PI;
        default: return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
    }
}

namespace {

// Kronrod-15 nodes (positive half) and weights; Gauss-7 weights on the
// odd-indexed nodes. Standard values.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    double value;
    double err;
};

// One G7K15 rule application on [a,b].
Panel gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    for (int k = 0; k < 7; ++k) {
        fv[k] = f(c - h * kXgk[k]);
        fv[14 - k] = f(c + h * kXgk[k]);
    }
    double resk = kWgk[7] * fv[7];
    double resg = kWg[3] * fv[7];
    double resabs = kWgk[7] * std::fabs(fv[7]);
    for (int k = 0; k < 7; ++k) {
        resk += kWgk[k] * (fv[k] + fv[14 - k]);
        resabs += kWgk[k] * (std::fabs(fv[k]) + std::fabs(fv[14 - k]));
        if (k % 2 == 1) resg += kWg[k / 2] * (fv[k] + fv[14 - k]);
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::fabs(fv[7] - mean);
    for (int k = 0; k < 7; ++k)
        resasc += kWgk[k] * (std::fabs(fv[k] - mean) + std::fabs(fv[14 - k] - mean));
    resasc *= h;
    resabs *= h;
    double err = std::fabs(resk - resg) * h;
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = 50.0 * 2.220446049250313e-16 * resabs;
    if (err < eps) err = eps;
    return Panel{a, b, resk * h, err};
}

struct PanelOrder {
    const std::deque<Panel>* panels;
    // Max-heap on error; deterministic tie-break on left endpoint then index.
    bool operator()(int i, int j) const {
        const Panel& pi = (*panels)[i];
        const Panel& pj = (*panels)[j];
        if (pi.err != pj.err) return pi.err < pj.err;
        if (pi.a != pj.a) return pi.a > pj.a;
        return i > j;
    }
};

double pairwise_sum(std::vector<double>& v, size_t lo, size_t hi) {
    if (hi - lo <= 4) {
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

}  // namespace

QuadResult gk_adaptive(const std::function<double(double)>& f, double a, double b,
                       QuadTol tol, Budget& budget,
                       const std::vector<double>& split_hints) {
    QuadResult out;
    if (!(b > a)) return out;

    std::deque<Panel> panels;
    std::priority_queue<int, std::vector<int>, PanelOrder> heap{PanelOrder{&panels}};

    std::vector<double> cuts;
    cuts.push_back(a);
    for (double h : split_hints)
        if (h > a && h < b) cuts.push_back(h);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0, toterr = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!budget.take(15)) { out.converged = false; break; }
        panels.push_back(gk15(f, cuts[i], cuts[i + 1]));
        heap.push(static_cast<int>(panels.size()) - 1);
        total += panels.back().value;
        toterr += panels.back().err;
        out.n_evals += 15;
    }

    auto done = [&] {
        return toterr <= std::max(tol.abs, tol.rel * std::fabs(total));
    };

    while (!done() && !heap.empty()) {
        if (!budget.take(30)) { out.converged = false; break; }
        int idx = heap.top();
        heap.pop();
        Panel worst = panels[idx];
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) continue;  // interval at rounding limit
        Panel left = gk15(f, worst.a, mid);
        Panel right = gk15(f, mid, worst.b);
        out.n_evals += 30;
        total += left.value + right.value - worst.value;
        toterr += left.err + right.err - worst.err;
        panels[idx] = left;
        heap.push(idx);
        panels.push_back(right);
        heap.push(static_cast<int>(panels.size()) - 1);
    }

    // Final reduction in a scheduling-independent order: sort by position,
    // then pairwise-sum.
    std::vector<Panel> sorted(panels.begin(), panels.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const Panel& x, const Panel& y) { return x.a < y.a; });
    std::vector<double> vals(sorted.size()), errs(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) {
        vals[i] = sorted[i].value;
        errs[i] = sorted[i].err;
    }
    out.value = vals.empty() ? 0.0 : pairwise_sum(vals, 0, vals.size());
    out.err_estimate = errs.empty() ? 0.0 : pairwise_sum(errs, 0, errs.size());
    if (!done() && out.converged && !heap.empty()) out.converged = false;
    return out;
}

namespace {

// Recursive helper for integrate_rn: integrates over axes [axis, n) with the
// first (axis) coordinates of x fixed.
QuadResult integrate_axes(const std::function<double(const Vec&)>& f, int n, int axis,
                          Vec x, QuadTol tol, Budget& budget,
                          const std::vector<std::vector<double>>& hints) {
    std::vector<double> theta_hints;
    if (static_cast<size_t>(axis) < hints.size())
        for (double h : hints[axis]) theta_hints.push_back(std::atan(h));

    const double half_pi = 0.5 * M_PI;
    if (axis == n - 1) {
        auto g = [&](double th) {
            double t = std::tan(th);
            Vec xx = x;
            xx[axis] = t;
            return f(xx) * (1.0 + t * t);
        };
        return gk_adaptive(g, -half_pi, half_pi, tol, budget, theta_hints);
    }
    // Inner levels get a tighter pointwise tolerance; the outer panel sum
    // amplifies pointwise error by at most the theta-range pi, and the
    // Jacobian weight (1+t^2) amplifies the inner value, so the inner abs
    // target shrinks with it.
    const double base_abs = tol.abs / (2.0 * M_PI);
    QuadTol own{tol.abs * 0.5, tol.rel * 0.5};
    bool inner_ok = true;
    long long inner_evals = 0;
    auto g = [&](double th) {
        double t = std::tan(th);
        double w = 1.0 + t * t;
        Vec xx = x;
        xx[axis] = t;
        QuadTol inner{base_abs / w, std::max(tol.rel * 0.5, 1e-14)};
        QuadResult r = integrate_axes(f, n, axis + 1, xx, inner, budget, hints);
        inner_ok = inner_ok && r.converged;
        inner_evals += r.n_evals;
        return r.value * w;
    };
    QuadResult r = gk_adaptive(g, -half_pi, half_pi, own, budget, theta_hints);
    r.converged = r.converged && inner_ok;
    r.n_evals = inner_evals;
    return r;
}

}  // namespace

QuadResult integrate_rn(const std::function<double(const Vec&)>& f, int n,
                        double decay_q, QuadTol tol, Budget& budget,
                        const std::vector<std::vector<double>>& hints) {
    if (n < 1 || n > 3)
        throw std::invalid_argument("integrate_rn: n must be 1, 2 or 3");
    if (!(decay_q > n))
        throw std::invalid_argument("integrate_rn: declared decay must exceed n");
    return integrate_axes(f, n, 0, vec(), tol, budget, hints);
}

QuadResult integrate_radial(const std::function<double(double)>& g, int n,
                            QuadTol tol, Budget& budget,
                            const std::vector<double>& hints_r) {
    const double area = sphere_area(n);
    std::vector<double> th;
    for (double r : hints_r)
        if (r > 0.0) th.push_back(std::atan(r));
    auto f = [&, n](double theta) {
        double r = std::tan(theta);
        double w = 1.0 + r * r;
        return g(r) * std::pow(r, n - 1) * w;
    };
    QuadResult q = gk_adaptive(f, 0.0, 0.5 * M_PI, tol, budget, th);
    q.value *= area;
    q.err_estimate *= area;
    return q;
}

std::vector<double> atan_hints(const std::vector<double>& xs, double lo, double hi) {
    std::vector<double> out;
    for (double x : xs) {
        double th = std::atan(x);
        if (th > lo + 1e-12 && th < hi - 1e-12) out.push_back(th);
    }
    return out;
}

QuadResult integrate_cylinder(const std::function<double(double, double)>& f, int n,
                              QuadTol tol, Budget& budget,
                              const std::vector<double>& t_features,
                              const std::vector<double>& rho_features) {
    if (n < 2) throw std::invalid_argument("integrate_cylinder: n must be >= 2");
    const double rho_pow = n - 2.0;
    const double area = sphere_area(n - 1);
    const long long used0 = budget.used;
    bool all_ok = true;
    // The outer theta-range pi amplifies pointwise inner error by at most pi,
    // and the Jacobian weight (1+t^2) amplifies the inner value, so the inner
    // absolute target shrinks with both.
    const double base_abs = tol.abs / (area * M_PI);
    const double inner_rel = std::max(tol.rel * 0.5, 1e-14);
    const std::vector<double> rho_hints = atan_hints(rho_features, 0.0, 0.5 * M_PI);

    auto outer_f = [&](double theta) {
        const double t = std::tan(theta);
        const double wt = 1.0 + t * t;
        auto inner_f = [&](double phi) {
            const double rho = std::tan(phi);
            const double wr = 1.0 + rho * rho;
            const double rp = rho_pow == 0.0 ? 1.0 : std::pow(rho, rho_pow);
            return wr * rp * f(t, rho);
        };
        QuadTol itol{base_abs / wt, inner_rel};
        QuadResult r = gk_adaptive(inner_f, 0.0, 0.5 * M_PI, itol, budget, rho_hints);
        if (!r.converged) all_ok = false;
        return wt * r.value;
    };

    QuadTol otol{tol.abs / area * 0.5, tol.rel * 0.5};
    QuadResult out = gk_adaptive(outer_f, -0.5 * M_PI, 0.5 * M_PI, otol, budget,
                                 atan_hints(t_features, -0.5 * M_PI, 0.5 * M_PI));
    out.value *= area;
    out.err_estimate *= area;
    out.converged = out.converged && all_ok;
    out.n_evals = budget.used - used0;
    return out;
}

QuadResult integrate_halfspace_weighted(const std::function<double(double, const Vec&)>& f,
                                        const FracParams& p, double Y, double R,
                                        QuadTol tol, Budget& budget,
                                        const std::vector<double>& hints_y,
                                        const std::vector<std::vector<double>>& hints_x) {
    // t = y^(2-2g): int_0^Y y^(1-2g) h(y) dy = 1/(2-2g) int_0^{Y^(2-2g)} h(t^(1/(2-2g))) dt
    const double e = 2.0 - 2.0 * p.gamma;
    const double T = std::pow(Y, e);
    const long long used0 = budget.used;
    std::vector<double> th;
    for (double y : hints_y)
        if (y > 0.0 && y < Y) th.push_back(std::pow(y, e));

    QuadTol inner{tol.abs / (2.0 * T / e), std::max(tol.rel * 0.5, 1e-14)};
    QuadTol own{tol.abs * 0.5, tol.rel * 0.5};
    bool inner_ok = true;
    long long inner_evals = 0;

    const int n = p.n;
    auto xlevel = [&](double y) {
        // box integral over [-R,R]^n at fixed y, nested adaptive
        std::function<QuadResult(int, Vec&)> rec = [&](int axis, Vec& x) -> QuadResult {
            std::vector<double> hx;
            if (static_cast<size_t>(axis) < hints_x.size())
                for (double h : hints_x[axis])
                    if (h > -R && h < R) hx.push_back(h);
            if (axis == n - 1) {
                QuadTol leaf{inner.abs / std::pow(2.0 * R, n - 1), inner.rel};
                auto g1 = [&](double t) {
                    x[axis] = t;
                    return f(y, x);
                };
                return gk_adaptive(g1, -R, R, leaf, budget, hx);
            }
            QuadTol deeper{inner.abs / std::pow(2.0 * R, axis + 1), inner.rel};
            auto g1 = [&](double t) {
                x[axis] = t;
                Vec xx = x;
                QuadResult rr = rec(axis + 1, xx);
                inner_ok = inner_ok && rr.converged;
                return rr.value;
            };
            return gk_adaptive(g1, -R, R, deeper, budget, hx);
        };
        Vec x = vec();
        QuadResult r = rec(0, x);
        inner_ok = inner_ok && r.converged;
        inner_evals += r.n_evals;
        return r.value;
    };

    auto g = [&](double t) {
        double y = std::pow(t, 1.0 / e);
        return xlevel(y) / e;
    };
    QuadResult r = gk_adaptive(g, 0.0, T, own, budget, th);
    r.converged = r.converged && inner_ok;
    r.n_evals = budget.used - used0;
    (void)inner_evals;
    return r;
}

QuadResult integrate_halfspace_weighted_radial(const std::function<double(double, double)>& f,
                                               const FracParams& p, double Y, double R,
                                               QuadTol tol, Budget& budget,
                                               const std::vector<double>& hints_y,
                                               const std::vector<double>& hints_r) {
    const double e = 2.0 - 2.0 * p.gamma;
    const double T = std::pow(Y, e);
    const double area = sphere_area(p.n);
    const long long used0 = budget.used;
    std::vector<double> th;
    for (double y : hints_y)
        if (y > 0.0 && y < Y) th.push_back(std::pow(y, e));
    std::vector<double> hr;
    for (double r : hints_r)
        if (r > 0.0 && r < R) hr.push_back(r);

    QuadTol inner{tol.abs / (2.0 * T / e), tol.rel * 0.25};
    QuadTol own{tol.abs * 0.5, tol.rel * 0.5};
    bool inner_ok = true;
    const int n = p.n;

    auto g = [&](double t) {
        double y = std::pow(t, 1.0 / e);
        auto fr = [&](double r) { return f(y, r) * std::pow(r, n - 1) * area; };
        QuadResult rr = gk_adaptive(fr, 0.0, R, inner, budget, hr);
        inner_ok = inner_ok && rr.converged;
        return rr.value / e;
    };
    QuadResult r = gk_adaptive(g, 0.0, T, own, budget, th);
    r.converged = r.converged && inner_ok;
    r.n_evals = budget.used - used0;
    return r;
}

}  // namespace fracbubble
