#include "fracbubble/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fracbubble {

// ---------------------------------------------------------------------------
// XPoly
// ---------------------------------------------------------------------------

int XPoly::degree() const {
    int d = -1;
    for (const auto& [e, c] : terms) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
}

double XPoly::eval(const Vec& x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms) {
        double t = static_cast<double>(c);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < e[i]; ++k) t *= x[i];
        s += t;
    }
    return s;
}

XPoly xpoly_monomial(int e0, int e1, int e2, long long c) {
    XPoly p;
    if (c != 0) p.terms[{e0, e1, e2}] = c;
    return p;
}

XPoly xpoly_add(const XPoly& a, const XPoly& b) {
    XPoly out = a;
    for (const auto& [e, c] : b.terms) {
        auto it = out.terms.find(e);
        if (it == out.terms.end()) {
            out.terms[e] = c;
        } else {
            it->second += c;
            if (it->second == 0) out.terms.erase(it);
        }
    }
    return out;
}

XPoly xpoly_scale(const XPoly& a, long long c) {
    XPoly out;
    if (c == 0) return out;
    for (const auto& [e, k] : a.terms) out.terms[e] = c * k;
    return out;
}

XPoly xpoly_mul(const XPoly& a, const XPoly& b) {
    XPoly out;
    for (const auto& [ea, ca] : a.terms) {
        for (const auto& [eb, cb] : b.terms) {
            const std::array<int, 3> e{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]};
            auto it = out.terms.find(e);
            if (it == out.terms.end()) {
                out.terms[e] = ca * cb;
            } else {
                it->second += ca * cb;
                if (it->second == 0) out.terms.erase(it);
            }
        }
    }
    return out;
}

XPoly xpoly_laplacian(const XPoly& a, int n) {
    XPoly out;
    for (const auto& [e, c] : a.terms) {
        for (int i = 0; i < n; ++i) {
            if (e[i] < 2) continue;
            std::array<int, 3> d = e;
            d[i] -= 2;
            const long long add = c * e[i] * (e[i] - 1);
            auto it = out.terms.find(d);
            if (it == out.terms.end()) {
                out.terms[d] = add;
            } else {
                it->second += add;
                if (it->second == 0) out.terms.erase(it);
            }
        }
    }
    return out;
}

XPoly xpoly_radial_even(int n, int k) {
    XPoly r2;
    for (int i = 0; i < n; ++i) {
        std::array<int, 3> e{0, 0, 0};
        e[i] = 2;
        r2.terms[e] = 1;
    }
    XPoly out = xpoly_monomial(0, 0, 0, 1);
    for (int j = 0; j < k; ++j) out = xpoly_mul(out, r2);
    return out;
}

// ---------------------------------------------------------------------------
// DHarmonic construction and evaluation
// ---------------------------------------------------------------------------

namespace {

double ladder_factor(HarmonicFamily fam, int j, double g) {
    return fam == HarmonicFamily::neumann ? 2.0 * j - 2.0 * g : 2.0 * j + 2.0 * g;
}

}  // namespace

double DHarmonic::level_denominator(int l) const {
    double d = 1.0;
    for (int j = 1; j <= l; ++j) {
        const double f = ladder_factor(family, j, gamma);
        if (std::abs(f) < 1e-12) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "harmonic ladder factor (2*%d %c 2g) vanishes at gamma=%.6f", j,
                          family == HarmonicFamily::neumann ? '-' : '+', gamma);
            throw std::domain_error(buf);
        }
        d *= 2.0 * j * f;
    }
    return d;
}

double DHarmonic::eval(double y, const Vec& x) const {
    const double sigma = family == HarmonicFamily::neumann ? 0.0 : 2.0 * gamma;
    double s = 0.0;
    for (size_t l = 0; l < levels.size(); ++l)
        s += std::pow(y, sigma + 2.0 * l) * levels[l].eval(x) / level_denominator((int)l);
    return s;
}

double DHarmonic::eval_dy(double y, const Vec& x) const {
    const double sigma = family == HarmonicFamily::neumann ? 0.0 : 2.0 * gamma;
    double s = 0.0;
    for (size_t l = 0; l < levels.size(); ++l) {
        const double e = sigma + 2.0 * l;
        if (e == 0.0) continue;
        s += e * std::pow(y, e - 1.0) * levels[l].eval(x) / level_denominator((int)l);
    }
    return s;
}

double DHarmonic::eval_dyy(double y, const Vec& x) const {
    const double sigma = family == HarmonicFamily::neumann ? 0.0 : 2.0 * gamma;
    double s = 0.0;
    for (size_t l = 0; l < levels.size(); ++l) {
        const double e = sigma + 2.0 * l;
        if (e == 0.0 || e == 1.0) continue;
        s += e * (e - 1.0) * std::pow(y, e - 2.0) * levels[l].eval(x) /
             level_denominator((int)l);
    }
    return s;
}

double DHarmonic::eval_lap_x(double y, const Vec& x) const {
    const double sigma = family == HarmonicFamily::neumann ? 0.0 : 2.0 * gamma;
    double s = 0.0;
    for (size_t l = 0; l < levels.size(); ++l)
        s += std::pow(y, sigma + 2.0 * l) * xpoly_laplacian(levels[l], n).eval(x) /
             level_denominator((int)l);
    return s;
}

DHarmonic build_dharmonic(HarmonicFamily family, int m, const FracParams& p) {
    if (m < 0 || m > 6)
        throw std::invalid_argument("build_dharmonic: degree cap is 0 <= m <= 6");
    if (family == HarmonicFamily::dirichlet && p.near_half)
        throw std::domain_error(
            "build_dharmonic: fractional-power family degenerates near gamma = 1/2");

    XPoly seed = (m % 2 == 0)
                     ? xpoly_radial_even(p.n, m / 2)
                     : xpoly_mul(xpoly_monomial(1, 0, 0, 1), xpoly_radial_even(p.n, (m - 1) / 2));

    DHarmonic h;
    h.family = family;
    h.n = p.n;
    h.m = m;
    h.gamma = p.gamma;
    h.degree = family == HarmonicFamily::neumann ? (double)m : m + 2.0 * p.gamma;
    for (XPoly cur = seed; !cur.is_zero(); cur = xpoly_scale(xpoly_laplacian(cur, p.n), -1))
        h.levels.push_back(cur);
    return h;
}

long long dharmonic_symbolic_residual(const DHarmonic& h) {
    long long worst = 0;
    for (size_t l = 0; l < h.levels.size(); ++l) {
        XPoly defect = xpoly_laplacian(h.levels[l], h.n);
        if (l + 1 < h.levels.size()) defect = xpoly_add(defect, h.levels[l + 1]);
        for (const auto& [e, c] : defect.terms) worst = std::max(worst, std::llabs(c));
    }
    return worst;
}

double dharmonic_flux_residual(const DHarmonic& h, double y, const Vec& x) {
    const double t1 = h.eval_dyy(y, x);
    const double t2 = (1.0 - 2.0 * h.gamma) / y * h.eval_dy(y, x);
    const double t3 = h.eval_lap_x(y, x);
    return std::abs(t1 + t2 + t3) / (1.0 + std::abs(t1) + std::abs(t2) + std::abs(t3));
}

// ---------------------------------------------------------------------------
// Half-sphere eigenvalue law
// ---------------------------------------------------------------------------

double eigenvalue_law(double k, const FracParams& p) {
    return k * (k + p.n - 2.0 * p.gamma);
}

SphereCheck check_sphere_eigen(const DHarmonic& h, int npoints, double eta_min) {
    const double g = h.gamma;
    const double k = h.degree;
    const double lam = k * (k + h.n - 2.0 * g);
    SphereCheck out;
    out.points = npoints;

    const double a1 = std::sqrt(2.0) - 1.0;
    const double a2 = std::sqrt(3.0) - 1.0;
    const double a3 = std::sqrt(5.0) - 2.0;
    auto fr = [](double v) { return v - std::floor(v); };

    for (int i = 0; i < npoints; ++i) {
        const double u1 = fr((i + 0.5) * a1);
        const double u2 = fr((i + 0.5) * a2);
        const double u3 = fr((i + 0.5) * a3);
        const double eta = eta_min + (0.995 - eta_min) * u1;
        const double rho = std::sqrt(std::max(0.0, 1.0 - eta * eta));
        Vec x = vec();
        if (h.n == 1) {
            x[0] = (i % 2 == 0) ? rho : -rho;
        } else if (h.n == 2) {
            x[0] = rho * std::cos(2.0 * M_PI * u2);
            x[1] = rho * std::sin(2.0 * M_PI * u2);
        } else {
            const double w = 2.0 * u3 - 1.0;
            const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
            x[0] = rho * s * std::cos(2.0 * M_PI * u2);
            x[1] = rho * s * std::sin(2.0 * M_PI * u2);
            x[2] = rho * w;
        }

        // Restrict to the sphere via the ambient partials: for degree-k
        // homogeneous u, the tangential pieces reduce to
        //   Lap_S e   = Lap u - k (k + n - 1) u          (0-homogeneous extension)
        //   grad_S(eta^{1-2g}) . grad_S e
        //             = (1 - 2g) eta^{-2g} (d_y u - k y u)   (Euler identity)
        const double u = h.eval(eta, x);
        const double uy = h.eval_dy(eta, x);
        const double lap = h.eval_dyy(eta, x) + h.eval_lap_x(eta, x);
        const double w1 = std::pow(eta, 1.0 - 2.0 * g);
        const double t1 = w1 * (lap - k * (k + h.n - 1.0) * u);
        const double t2 = (1.0 - 2.0 * g) * std::pow(eta, -2.0 * g) * (uy - k * eta * u);
        const double lhs = -(t1 + t2);
        const double rhs = lam * w1 * u;
        const double resid =
            std::abs(lhs - rhs) / (1.0 + std::abs(t1) + std::abs(t2) + std::abs(rhs));
        out.max_residual = std::max(out.max_residual, resid);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Solvability expressions
// ---------------------------------------------------------------------------

namespace {

double solv_raw(HarmonicFamily which, long long mp, long long m, int n, double g) {
    const double g2 = 2.0 * g;
    if (which == HarmonicFamily::dirichlet)
        return ((double)mp + g2) * ((double)mp + n) -
               ((double)m - n + 1.0) * ((double)m + 1.0 - g2);
    return (double)mp * ((double)mp + n - g2) -
           ((double)m - n + 1.0 + g2) * ((double)m + 1.0);
}

}  // namespace

double solvability_dirichlet(long long m_prime, long long m, const FracParams& p) {
    return solv_raw(HarmonicFamily::dirichlet, m_prime, m, p.n, p.gamma);
}

double solvability_neumann(long long m_prime, long long m, const FracParams& p) {
    return solv_raw(HarmonicFamily::neumann, m_prime, m, p.n, p.gamma);
}

SolvabilityScan solvability_scan(HarmonicFamily which, int bound, const FracParams& p) {
    SolvabilityScan out;
    out.min_abs = std::numeric_limits<double>::infinity();
    for (long long mp = 0; mp <= bound; ++mp) {
        for (long long m = 0; m <= bound; ++m) {
            const double v = std::abs(solv_raw(which, mp, m, p.n, p.gamma));
            if (v < out.min_abs) {
                out.min_abs = v;
                out.arg_m_prime = mp;
                out.arg_m = m;
            }
        }
    }
    return out;
}

std::vector<std::pair<long long, long long>> find_half_degeneracy(HarmonicFamily which,
                                                                  int n, int bound) {
    if (bound < 0 || bound > 1000)
        throw std::invalid_argument("find_half_degeneracy: bound must lie in [0, 1000]");
    std::vector<std::pair<long long, long long>> zeros;
    for (long long mp = 0; mp <= bound; ++mp) {
        for (long long m = 0; m <= bound; ++m) {
            // 2*gamma = 1 exactly: both expressions are integers
            const long long v = which == HarmonicFamily::dirichlet
                                    ? (mp + 1) * (mp + n) - (m - n + 1) * m
                                    : mp * (mp + n - 1) - (m - n + 2) * (m + 1);
            if (v == 0) zeros.emplace_back(mp, m);
        }
    }
    return zeros;
}

bool crossing_is_simple(HarmonicFamily which, long long m_prime, long long m, int n) {
    return solv_raw(which, m_prime, m, n, 0.49) * solv_raw(which, m_prime, m, n, 0.51) < 0.0;
}

void write_degeneracy_json(HarmonicFamily which, int n, int bound,
                           const std::vector<std::pair<long long, long long>>& pairs,
                           std::ostream& os) {
    os << "{\"condition\":\""
       << (which == HarmonicFamily::dirichlet ? "dirichlet" : "neumann")
       << "\",\"n\":" << n << ",\"bound\":" << bound << ",\"pairs\":[";
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (i) os << ',';
        os << '[' << pairs[i].first << ',' << pairs[i].second << ']';
    }
    os << "]}\n";
}

}  // namespace fracbubble
