#include "fracbubble/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "fracbubble/bubbles.hpp"
#include "fracbubble/constants.hpp"
#include "fracbubble/interactions.hpp"

namespace fracbubble {

namespace {

double sq(double v) { return v * v; }

// Unit vector along v (n components), plus any unit vector orthogonal to it.
Vec unit(const Vec& v, int n) {
    const double len = std::sqrt(norm2(v, n));
    Vec e = scale(v, 1.0 / len);
    for (int k = n; k < 3; ++k) e[k] = 0.0;
    return e;
}

Vec orthogonal_unit(const Vec& e, int n) {
    // Start from the coordinate axis least aligned with e and project it off.
    int k_min = 0;
    for (int k = 1; k < n; ++k)
        if (std::fabs(e[k]) < std::fabs(e[k_min])) k_min = k;
    Vec w = vec();
    w[k_min] = 1.0;
    const double d = dot(w, e, n);
    for (int k = 0; k < n; ++k) w[k] -= d * e[k];
    return unit(w, n);
}

}  // namespace

BubbleSum make_bubble_sum(const FracParams& p, std::vector<double> alphas,
                          std::vector<Bubble> bubbles) {
    if (alphas.empty() || alphas.size() != bubbles.size())
        throw std::invalid_argument(
            "make_bubble_sum: need equally many weights and bubbles, at least one");
    for (double a : alphas)
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::invalid_argument("make_bubble_sum: weights must be positive finite");
    return BubbleSum{p, std::move(alphas), std::move(bubbles)};
}

double eval_bubble_sum(const BubbleSum& u, const Vec& x) {
    double s = 0.0;
    for (size_t i = 0; i < u.bubbles.size(); ++i)
        s += u.alphas[i] * eval_bubble(u.bubbles[i], x, u.params);
    return s;
}

QuadraticBreakdown quadratic_form(const BubbleSum& u, EnergyRoute route, QuadTol tol,
                                  Budget& budget) {
    const FracParams& p = u.params;
    if (p.near_half)
        throw std::domain_error(
            "quadratic_form: expansion constants unavailable inside the gamma = 1/2 "
            "guard band");
    const ConstantSet& cs = cached_constants(p);

    QuadraticBreakdown out;
    if (route == EnergyRoute::spectral) {
        // Multiplier-normalized operator route: the operator applied to a
        // bubble is c_frac * delta^{p_crit} (PV-ratio oracle), so the diagonal
        // energy collapses to c_frac * c1. The gate is the constancy of that
        // ratio over the stencil.
        if (!cs.converged || !(cs.pde_ratio_spread < 1e-6))
            throw std::runtime_error(
                "quadratic_form: spectral route resolution gate failed "
                "(operator/nonlinearity ratio not constant)");
        out.self_energy = cs.c_frac * cs.c1;
    } else {
        // Half-space route: weighted Dirichlet energy of the harmonic lift.
        if (!cs.converged || !(cs.extension_gap < 5e-3))
            throw std::runtime_error(
                "quadratic_form: extension route resolution gate failed "
                "(grid energy not resolution-converged)");
        out.self_energy = cs.c2;
    }

    const size_t k = u.bubbles.size();
    double total = 0.0;
    for (size_t i = 0; i < k; ++i) total += sq(u.alphas[i]) * out.self_energy;

    // Cross terms via the self-adjointness identity e = c_frac * int d_i^p d_j.
    // Each unordered pair is integrated once; congruent pairs (equal scales
    // and separation) share a single quadrature.
    std::map<std::tuple<double, double, double>, double> congruent;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j) {
            const Bubble& bi = u.bubbles[i];
            const Bubble& bj = u.bubbles[j];
            const double d2 = norm2(sub(bi.center, bj.center), p.n);
            const double lo = std::min(bi.scale, bj.scale);
            const double hi = std::max(bi.scale, bj.scale);
            const auto key = std::make_tuple(lo, hi, d2);
            auto it = congruent.find(key);
            double e;
            if (it != congruent.end()) {
                e = it->second;
            } else {
                QuadResult r = interaction_oracle(bi, bj, p, tol, budget);
                out.converged = out.converged && r.converged;
                e = cs.c_frac * r.value;
                congruent.emplace(key, e);
            }
            out.cross.push_back(e);
            total += 2.0 * u.alphas[i] * u.alphas[j] * e;
        }
    out.value = total;
    return out;
}

QuadResult volume_integral(const BubbleSum& u, QuadTol tol, Budget& budget) {
    const FracParams& p = u.params;
    const double q = p.critical_exponent + 1.0;  // 2n/(n-2g)
    const size_t k = u.bubbles.size();

    bool coincident = true;
    for (size_t i = 1; i < k && coincident; ++i)
        coincident = norm2(sub(u.bubbles[i].center, u.bubbles[0].center), p.n) == 0.0;

    if (coincident) {
        // One common center: the sum is radial about it.
        std::vector<double> hints;
        for (const Bubble& b : u.bubbles) hints.push_back(1.0 / b.scale);
        const Vec a = u.bubbles[0].center;
        auto g = [&](double r) {
            Vec x = a;
            x[0] += r;
            return std::pow(eval_bubble_sum(u, x), q);
        };
        return integrate_radial(g, p.n, tol, budget, hints);
    }

    if (p.n == 1) {
        std::vector<double> feats;
        for (const Bubble& b : u.bubbles) {
            feats.push_back(b.center[0] - 1.0 / b.scale);
            feats.push_back(b.center[0]);
            feats.push_back(b.center[0] + 1.0 / b.scale);
        }
        constexpr double kHalfPi = 1.57079632679489661923;
        auto f = [&](double theta) {
            const double t = std::tan(theta);
            const double wt = 1.0 + t * t;
            return wt * std::pow(eval_bubble_sum(u, vec(t)), q);
        };
        const long long used0 = budget.used;
        QuadResult r = gk_adaptive(f, -kHalfPi, kHalfPi, tol, budget,
                                   atan_hints(feats, -kHalfPi, kHalfPi));
        r.n_evals = budget.used - used0;
        return r;
    }

    if (k == 2) {
        // Two distinct centers: axially symmetric about the line joining them.
        const Bubble& b0 = u.bubbles[0];
        const Bubble& b1 = u.bubbles[1];
        const Vec diff = sub(b1.center, b0.center);
        const double d = std::sqrt(norm2(diff, p.n));
        const Vec e = unit(diff, p.n);
        const Vec w = orthogonal_unit(e, p.n);
        auto f = [&](double t, double rho) {
            Vec x = b0.center;
            for (int c = 0; c < p.n; ++c) x[c] += t * e[c] + rho * w[c];
            return std::pow(eval_bubble_sum(u, x), q);
        };
        return integrate_cylinder(
            f, p.n, tol, budget,
            {-1.0 / b0.scale, 0.0, 1.0 / b0.scale, d - 1.0 / b1.scale, d,
             d + 1.0 / b1.scale},
            {1.0 / b0.scale, 1.0 / b1.scale});
    }

    // General configuration: iterated full-dimension quadrature with the
    // center coordinates (plus one bubble width each side) as axis hints.
    std::vector<std::vector<double>> hints(p.n);
    for (const Bubble& b : u.bubbles)
        for (int c = 0; c < p.n; ++c) {
            hints[c].push_back(b.center[c] - 1.0 / b.scale);
            hints[c].push_back(b.center[c]);
            hints[c].push_back(b.center[c] + 1.0 / b.scale);
        }
    auto f = [&](const Vec& x) { return std::pow(eval_bubble_sum(u, x), q); };
    return integrate_rn(f, p.n, 2.0 * p.n, tol, budget, hints);
}

EnergyReport yamabe_quotient(const BubbleSum& u, QuadTol tol, Budget& budget,
                             EnergyRoute route) {
    const FracParams& p = u.params;
    const double q = p.critical_exponent + 1.0;
    const double vol_pow = (p.n - 2.0 * p.gamma) / p.n;

    // Compute on max-normalized weights so that rescaling every weight by t
    // reproduces the identical normalized sum (exactly when the divisions
    // round identically, e.g. equal weights or power-of-two t); the quotient
    // is then invariant by construction, and the reported quadratic/volume
    // entries are rescaled back.
    const double a_max = *std::max_element(u.alphas.begin(), u.alphas.end());
    BubbleSum un = u;
    for (double& a : un.alphas) a /= a_max;

    QuadraticBreakdown qb = quadratic_form(un, route, tol, budget);
    QuadResult vol = volume_integral(un, tol, budget);

    EnergyReport rep;
    rep.quotient = qb.value / std::pow(vol.value, vol_pow);
    rep.quadratic = a_max * a_max * qb.value;
    rep.volume = std::pow(a_max, q) * vol.value;
    rep.converged = qb.converged && vol.converged;
    return rep;
}

std::vector<Vec> simplex_vertices(int p, double edge, int n) {
    if (n < 1 || n > 3) throw std::invalid_argument("simplex_vertices: n must be 1..3");
    if (!(edge > 0.0)) throw std::invalid_argument("simplex_vertices: edge must be positive");
    if (p < 2 || p > n + 1)
        throw std::invalid_argument(
            "simplex_vertices: p equidistant points need p-1 dimensions (2 <= p <= n+1)");
    const double h = 0.5 * edge;
    switch (p) {
        case 2:
            return {vec(-h), vec(h)};
        case 3: {
            const double r3 = std::sqrt(3.0);
            return {vec(0.0, edge / r3), vec(-h, -h / r3), vec(h, -h / r3)};
        }
        default: {  // p == 4, n == 3
            const double s = edge / (2.0 * std::sqrt(2.0));
            return {vec(s, s, s), vec(s, -s, -s), vec(-s, s, -s), vec(-s, -s, s)};
        }
    }
}

std::vector<SweepRow> barycenter_sweep(int p, const std::vector<double>& seps,
                                       double lambda, const FracParams& prm,
                                       QuadTol tol, Budget& budget) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("barycenter_sweep: lambda must be positive");
    const ConstantSet& cs = cached_constants(prm);
    if (!cs.expansion_available)
        throw std::domain_error(
            "barycenter_sweep: expansion constants unavailable inside the gamma = 1/2 "
            "guard band");
    const double bound = std::pow(static_cast<double>(p), 2.0 * prm.gamma / prm.n) *
                         cs.yamabe_sphere;

    std::vector<SweepRow> rows;
    for (double sep : seps) {
        std::vector<Bubble> bubbles;
        for (const Vec& v : simplex_vertices(p, sep, prm.n))
            bubbles.push_back(make_bubble(v, lambda));
        const std::vector<double> ones(bubbles.size(), 1.0);
        BubbleSum u = make_bubble_sum(prm, ones, std::move(bubbles));

        SweepRow row;
        row.p = p;
        row.sep = sep;
        for (size_t i = 0; i < u.bubbles.size(); ++i)
            for (size_t j = 0; j < u.bubbles.size(); ++j)
                if (i != j) row.eps_sum += epsilon_ij(u.bubbles[i], u.bubbles[j], prm);
        EnergyReport rep = yamabe_quotient(u, tol, budget);
        row.quotient = rep.quotient;
        row.bound = bound;
        row.deficit = bound - rep.quotient;
        row.deficit_per_eps = row.deficit / row.eps_sum;
        rows.push_back(row);
    }
    return rows;
}

void write_barycenter_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "p,sep,eps_sum,quotient,bound,deficit,deficit_per_eps\n";
    char buf[256];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.p,
                      r.sep, r.eps_sum, r.quotient, r.bound, r.deficit,
                      r.deficit_per_eps);
        os << buf;
    }
}

}  // namespace fracbubble
