#include "fracbubble/frac_laplacian.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace fracbubble {

double pv_normalization(int n, double gamma) {
    // C(n,g) = 4^g g Gamma(n/2+g) / (pi^{n/2} Gamma(1-g)); multiplier |xi|^{2g}.
    return std::pow(4.0, gamma) * gamma *
           std::exp(std::lgamma(0.5 * n + gamma) - std::lgamma(1.0 - gamma)) /
           std::pow(M_PI, 0.5 * n);
}

namespace {

// Average of u over the sphere |xi - x| = r, times sphere_area(n).
double sphere_sum(const ScalarField& u, const Vec& x, int n, double r,
                  QuadTol tol, Budget& budget) {
    if (n == 1) {
        budget.take(2);
        Vec a = x, b = x;
        a[0] += r;
        b[0] -= r;
        return u.value(a) + u.value(b);
    }
    if (n == 2) {
        auto g = [&](double th) {
            budget.take(1);
            Vec p{x[0] + r * std::cos(th), x[1] + r * std::sin(th), 0.0};
            return u.value(p);
        };
        return gk_adaptive(g, 0.0, 2.0 * M_PI, tol, budget).value;
    }
    // n == 3: polar angle t = cos(phi), azimuth psi
    QuadTol inner{tol.abs / (2.0 * M_PI), tol.rel * 0.5};
    auto g = [&](double t) {
        double s = std::sqrt(std::max(0.0, 1.0 - t * t));
        auto h = [&](double psi) {
            budget.take(1);
            Vec p{x[0] + r * s * std::cos(psi), x[1] + r * s * std::sin(psi), x[2] + r * t};
            return u.value(p);
        };
        return gk_adaptive(h, 0.0, 2.0 * M_PI, inner, budget).value;
    };
    return gk_adaptive(g, -1.0, 1.0, QuadTol{tol.abs * 0.5, tol.rel * 0.5}, budget).value;
}

double fd_laplacian(const ScalarField& u, const Vec& x, int n, Budget& budget) {
    const double h = 1e-4 * u.width;
    double s = 0.0;
    budget.take(2 * n + 1);
    const double u0 = u.value(x);
    for (int c = 0; c < n; ++c) {
        Vec a = x, b = x;
        a[c] += h;
        b[c] -= h;
        s += (u.value(a) - 2.0 * u0 + u.value(b)) / (h * h);
    }
    return s;
}

}  // namespace

QuadResult frac_laplacian_pv(const ScalarField& u, const Vec& x, const FracParams& p,
                             QuadTol tol, Budget& budget) {
    const int n = p.n;
    const double g2 = 2.0 * p.gamma;
    const double area = sphere_area(n);
    const double C = pv_normalization(n, p.gamma);
    const long long used0 = budget.used;

    const double h = 1e-3 * u.width;
    const double lap = u.laplacian ? u.laplacian(x) : fd_laplacian(u, x, n, budget);
    // Inside |xi-x| < h: u(x)-u(xi) ~ -grad.(xi-x) - 1/2 (xi-x)^T H (xi-x);
    // the gradient part cancels, the Hessian part averages to Delta u / (2n).
    const double inner = -(lap / (2.0 * n)) * area * std::pow(h, 2.0 - g2) / (2.0 - g2);

    budget.take(1);
    const double ux = u.value(x);

    // Split radius: beyond R0 the u(x) part is exact and the remainder is
    // compactified with r = R0/t.
    double rmax = 0.0;
    for (const Vec& f : u.features) {
        double d = std::sqrt(norm2(sub(f, x), n));
        rmax = std::max(rmax, d);
    }
    const double R0 = 64.0 * std::max(1.0, u.width) + 2.0 * rmax;

    std::vector<double> hints;
    for (const Vec& f : u.features) {
        double d = std::sqrt(norm2(sub(f, x), n));
        if (d > h && d < R0) hints.push_back(d);
    }

    QuadTol stol{tol.abs * 0.02, tol.rel * 0.02};
    auto mid_integrand = [&](double r) {
        double A = sphere_sum(u, x, n, r, stol, budget);
        return std::pow(r, -1.0 - g2) * (area * ux - A);
    };
    QuadTol mtol{tol.abs * 0.45 / C, tol.rel * 0.45};
    QuadResult mid = gk_adaptive(mid_integrand, h, R0, mtol, budget, hints);

    // Tail: int_R0^inf r^{-1-2g} (area u(x) - A(r)) dr
    //     = area u(x) R0^{-2g} / 2g - R0^{-2g} int_0^1 t^{2g-1} A(R0/t) dt.
    const double tail_u = area * ux * std::pow(R0, -g2) / g2;
    auto tail_integrand = [&](double t) {
        double A = sphere_sum(u, x, n, R0 / t, stol, budget);
        return std::pow(t, g2 - 1.0) * A;
    };
    QuadResult tail_a = gk_adaptive(tail_integrand, 0.0, 1.0, mtol, budget);

    QuadResult out;
    out.value = C * (inner + mid.value + tail_u - std::pow(R0, -g2) * tail_a.value);
    out.err_estimate = C * (mid.err_estimate + std::pow(R0, -g2) * tail_a.err_estimate);
    out.n_evals = budget.used - used0;
    out.converged = mid.converged && tail_a.converged && budget.ok();
    return out;
}

namespace {

// Iterative radix-2 complex FFT, in place. Size must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t N = a.size();
    for (size_t i = 1, j = 0; i < N; ++i) {
        size_t bit = N >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= N; len <<= 1) {
        double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < N; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> s = a[i + k];
                std::complex<double> t = a[i + k + len / 2] * w;
                a[i + k] = s + t;
                a[i + k + len / 2] = s - t;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= static_cast<double>(N);
}

struct GridEval {
    double value;
    double boundary_ratio;
};

GridEval spectral_on_grid(const std::function<double(const Vec&)>& u, const Vec& x,
                          int n, double gamma, double L, int N, Vec* snapped) {
    const double hstep = 2.0 * L / N;
    auto coord = [&](int i) { return (i - N / 2) * hstep; };
    size_t total = 1;
    for (int d = 0; d < n; ++d) total *= static_cast<size_t>(N);

    std::vector<std::complex<double>> a(total);
    double umax = 0.0, ubnd = 0.0;
    std::vector<int> idx(n, 0);
    for (size_t lin = 0; lin < total; ++lin) {
        size_t rem = lin;
        Vec pos = vec();
        bool on_boundary = false;
        for (int d = 0; d < n; ++d) {
            idx[d] = static_cast<int>(rem % N);
            rem /= N;
            pos[d] = coord(idx[d]);
            if (idx[d] == 0) on_boundary = true;
        }
        double v = u(pos);
        a[lin] = v;
        umax = std::max(umax, std::fabs(v));
        if (on_boundary) ubnd = std::max(ubnd, std::fabs(v));
    }

    // FFT along each axis.
    std::vector<std::complex<double>> line(N);
    size_t stride = 1;
    for (int d = 0; d < n; ++d) {
        size_t outer = total / N;
        for (size_t o = 0; o < outer; ++o) {
            // index arithmetic: o enumerates all positions of the other axes
            size_t base = (o / stride) * stride * N + (o % stride);
            for (int i = 0; i < N; ++i) line[i] = a[base + i * stride];
            fft_pow2(line, false);
            for (int i = 0; i < N; ++i) a[base + i * stride] = line[i];
        }
        stride *= N;
    }

    const double k0 = M_PI / L;  // fundamental angular frequency of period 2L
    for (size_t lin = 0; lin < total; ++lin) {
        size_t rem = lin;
        double k2 = 0.0;
        for (int d = 0; d < n; ++d) {
            int i = static_cast<int>(rem % N);
            rem /= N;
            int m = i <= N / 2 ? i : i - N;
            double kc = k0 * m;
            k2 += kc * kc;
        }
        a[lin] *= std::pow(k2, gamma);  // |k|^{2g}; k = 0 gives 0 for g > 0
    }

    stride = 1;
    for (int d = 0; d < n; ++d) {
        size_t outer = total / N;
        for (size_t o = 0; o < outer; ++o) {
            size_t base = (o / stride) * stride * N + (o % stride);
            for (int i = 0; i < N; ++i) line[i] = a[base + i * stride];
            fft_pow2(line, true);
            for (int i = 0; i < N; ++i) a[base + i * stride] = line[i];
        }
        stride *= N;
    }

    size_t lin = 0;
    size_t mul = 1;
    for (int d = 0; d < n; ++d) {
        int i = static_cast<int>(std::lround(x[d] / hstep)) + N / 2;
        i = std::max(0, std::min(N - 1, i));
        if (snapped) (*snapped)[d] = coord(i);
        lin += mul * static_cast<size_t>(i);
        mul *= N;
    }
    return GridEval{a[lin].real(), umax > 0.0 ? ubnd / umax : 0.0};
}

}  // namespace

SpectralValue frac_laplacian_spectral(const std::function<double(const Vec&)>& u,
                                      const Vec& x, const FracParams& p,
                                      double half_width, int grid_n,
                                      double boundary_threshold) {
    if (grid_n < 8 || (grid_n & (grid_n - 1)) != 0)
        throw std::invalid_argument("frac_laplacian_spectral: grid size must be a power of two >= 8");
    SpectralValue out;
    GridEval fine = spectral_on_grid(u, x, p.n, p.gamma, half_width, grid_n, &out.snapped);
    GridEval coarse = spectral_on_grid(u, x, p.n, p.gamma, half_width, grid_n / 2, nullptr);
    out.value = fine.value;
    out.coarse_value = coarse.value;
    out.richardson_gap = std::fabs(fine.value - coarse.value) /
                         std::max(std::fabs(fine.value), 1e-300);
    out.boundary_ratio = fine.boundary_ratio;
    out.box_ok = fine.boundary_ratio <= boundary_threshold;
    return out;
}

}  // namespace fracbubble
