#include "fracbubble/extension.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fracbubble {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sq(double v) { return v * v; }

}  // namespace

// ---------------------------------------------------------------------------
// Poisson kernel
// ---------------------------------------------------------------------------

PoissonKernel::PoissonKernel(const FracParams& p, Budget& budget) : p_(p) {
    QuadResult c3 = c3_oracle(p, QuadTol{1e-12, 1e-10}, budget);
    if (!c3.converged) throw std::runtime_error("kernel normalization quadrature exhausted");
    p_norm_ = 1.0 / c3.value;
}

PoissonKernel::PoissonKernel(const FracParams& p, double p_norm) : p_(p), p_norm_(p_norm) {}

double PoissonKernel::radial(double y, double dist) const {
    const double q = dist * dist + y * y;
    return p_norm_ * std::pow(y, 2.0 * p_.gamma) *
           std::pow(q, -0.5 * (p_.n + 2.0 * p_.gamma));
}

double PoissonKernel::operator()(double y, const Vec& x, const Vec& xi) const {
    return radial(y, std::sqrt(norm2(sub(x, xi), p_.n)));
}

QuadResult kernel_mass(const PoissonKernel& K, double y, QuadTol tol, Budget& budget) {
    const int n = K.params().n;
    auto g = [&](double s) { return K.radial(y, s); };
    return integrate_radial(g, n, tol, budget, {y});
}

// ---------------------------------------------------------------------------
// Convolution lifts
// ---------------------------------------------------------------------------

namespace {

// Nested integral over (t, rho) in R x [0, inf) of
//    rho^{n-2} * data(sqrt(t^2 + rho^2)) * ((d - t)^2 + rho^2 + y^2)^{-(n+2g)/2}
// with the cylindrical angular factor |S^{n-2}| already applied by the caller.
// Both axes are tan-compactified; the inner absolute tolerance is scaled down
// by the outer Jacobian weight so weight amplification cannot corrupt the sum.
QuadResult plane_cylinder_integral(const std::function<double(double)>& data, double y,
                                   double d, const FracParams& p, QuadTol tol,
                                   Budget& budget, const std::vector<double>& t_feats,
                                   const std::vector<double>& rho_feats) {
    const double expo = -0.5 * (p.n + 2.0 * p.gamma);
    const double rho_pow = p.n - 2.0;
    const long long used0 = budget.used;
    bool all_ok = true;
    const double base_abs = tol.abs / kPi;
    const double inner_rel = std::max(tol.rel * 0.5, 1e-14);

    auto outer_f = [&](double theta) {
        const double t = std::tan(theta);
        const double wt = 1.0 + t * t;
        auto inner_f = [&](double phi) {
            const double rho = std::tan(phi);
            const double wr = 1.0 + rho * rho;
            const double s = std::hypot(t, rho);
            const double q = sq(d - t) + rho * rho + y * y;
            double rp = rho_pow == 0.0 ? 1.0 : std::pow(rho, rho_pow);
            return wr * rp * data(s) * std::pow(q, expo);
        };
        QuadTol itol{base_abs / wt, inner_rel};
        QuadResult r = gk_adaptive(inner_f, 0.0, 0.5 * kPi, itol, budget,
                                   atan_hints(rho_feats, 0.0, 0.5 * kPi));
        if (!r.converged) all_ok = false;
        return wt * r.value;
    };

    QuadTol otol{tol.abs * 0.5, tol.rel * 0.5};
    QuadResult out = gk_adaptive(outer_f, -0.5 * kPi, 0.5 * kPi, otol, budget,
                                 atan_hints(t_feats, -0.5 * kPi, 0.5 * kPi));
    out.converged = out.converged && all_ok;
    out.n_evals = budget.used - used0;
    return out;
}

}  // namespace

QuadResult extend_bubble_convolution(const PoissonKernel& K, const Bubble& b, double y,
                                     const Vec& x, QuadTol tol, Budget& budget) {
    const FracParams& p = K.params();
    if (y <= 0.0) return QuadResult{eval_bubble(b, x, p), 0.0, 0, true};

    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    const double lam = b.scale;
    const double lam_m = std::pow(lam, m);
    const double pref = K.norm_constant() * std::pow(y, 2.0 * p.gamma);
    const double d = std::sqrt(norm2(sub(x, b.center), p.n));
    auto profile = [&](double s) { return lam_m * std::pow(1.0 + sq(lam * s), -m); };

    const long long used0 = budget.used;
    QuadResult out;

    if (p.n >= 2 && d < 1e-14) {
        // radial fast path: probe above the bubble center
        const double expo = -0.5 * (p.n + 2.0 * p.gamma);
        auto g = [&](double s) { return profile(s) * std::pow(s * s + y * y, expo); };
        out = integrate_radial(g, p.n, tol, budget, {1.0 / lam, y});
        out.value *= pref;
        out.err_estimate *= pref;
        return out;
    }

    if (p.n == 1) {
        const double expo = -0.5 * (p.n + 2.0 * p.gamma);
        auto f = [&](double theta) {
            const double t = std::tan(theta);
            const double wt = 1.0 + t * t;
            return wt * profile(std::abs(t)) * std::pow(sq(d - t) + y * y, expo);
        };
        out = gk_adaptive(f, -0.5 * kPi, 0.5 * kPi, tol, budget,
                          atan_hints({-1.0 / lam, 0.0, 1.0 / lam, d}, -0.5 * kPi, 0.5 * kPi));
    } else {
        out = plane_cylinder_integral(profile, y, d, p, tol, budget,
                                      {-1.0 / lam, 0.0, 1.0 / lam, d},
                                      {1.0 / lam, y});
        out.value *= sphere_area(p.n - 1);
        out.err_estimate *= sphere_area(p.n - 1);
    }
    out.value *= pref;
    out.err_estimate *= pref;
    out.n_evals = budget.used - used0;
    return out;
}

QuadResult extend_radial_convolution(const PoissonKernel& K,
                                     const std::function<double(double)>& data, double y,
                                     double r, double support_radius, QuadTol tol,
                                     Budget& budget, const std::vector<double>& s_hints) {
    const FracParams& p = K.params();
    const double pref = K.norm_constant() * std::pow(y, 2.0 * p.gamma);
    const double expo = -0.5 * (p.n + 2.0 * p.gamma);
    const long long used0 = budget.used;
    QuadResult out;

    if (p.n == 1) {
        auto f = [&](double t) {
            return data(std::abs(t)) * std::pow(sq(r - t) + y * y, expo);
        };
        std::vector<double> hints{0.0, r};
        for (double s : s_hints) { hints.push_back(s); hints.push_back(-s); }
        hints.erase(std::remove_if(hints.begin(), hints.end(),
                                   [&](double v) {
                                       return v <= -support_radius + 1e-12 ||
                                              v >= support_radius - 1e-12;
                                   }),
                    hints.end());
        out = gk_adaptive(f, -support_radius, support_radius, tol, budget, hints);
    } else {
        // finite box [-S, S] x [0, S]; data vanishes outside radius S
        const double S = support_radius;
        bool all_ok = true;
        const double base_abs = tol.abs / (2.0 * S);
        const double inner_rel = std::max(tol.rel * 0.5, 1e-14);
        const double rho_pow = p.n - 2.0;

        std::vector<double> rho_hints{y};
        for (double s : s_hints) rho_hints.push_back(s);
        rho_hints.erase(std::remove_if(rho_hints.begin(), rho_hints.end(),
                                       [&](double v) { return v <= 1e-12 || v >= S - 1e-12; }),
                        rho_hints.end());

        auto outer_f = [&](double t) {
            auto inner_f = [&](double rho) {
                const double s = std::hypot(t, rho);
                if (s >= S) return 0.0;
                double rp = rho_pow == 0.0 ? 1.0 : std::pow(rho, rho_pow);
                return rp * data(s) * std::pow(sq(r - t) + rho * rho + y * y, expo);
            };
            QuadTol itol{base_abs, inner_rel};
            QuadResult q = gk_adaptive(inner_f, 0.0, S, itol, budget, rho_hints);
            if (!q.converged) all_ok = false;
            return q.value;
        };

        std::vector<double> t_hints{0.0, r};
        for (double s : s_hints) { t_hints.push_back(s); t_hints.push_back(-s); }
        t_hints.erase(std::remove_if(t_hints.begin(), t_hints.end(),
                                     [&](double v) { return v <= -S + 1e-12 || v >= S - 1e-12; }),
                      t_hints.end());
        QuadTol otol{tol.abs * 0.5, tol.rel * 0.5};
        out = gk_adaptive(outer_f, -S, S, otol, budget, t_hints);
        out.converged = out.converged && all_ok;
        out.value *= sphere_area(p.n - 1);
        out.err_estimate *= sphere_area(p.n - 1);
    }
    out.value *= pref;
    out.err_estimate *= pref;
    out.n_evals = budget.used - used0;
    return out;
}

// ---------------------------------------------------------------------------
// Trace expansion fits
// ---------------------------------------------------------------------------

TraceExpansion fit_trace_expansion(const std::vector<double>& ys,
                                   const std::vector<double>& us, const FracParams& p,
                                   int n_terms) {
    // basis exponents 0, 2g, 2, 2+2g: the leading boundary expansion of a
    // solution of the weighted equation (indicial roots 0 and 2g mod 2)
    const int k = std::min(std::max(n_terms, 2), 4);
    const int npt = static_cast<int>(ys.size());
    if (npt < k + 1) throw std::invalid_argument("trace fit needs more samples than parameters");
    const double g2 = 2.0 * p.gamma;
    const double ymax = *std::max_element(ys.begin(), ys.end());
    const double expos[4] = {0.0, g2, 2.0, 2.0 + g2};

    // column scaling keeps the normal problem well conditioned on small windows
    Eigen::MatrixXd A(npt, k);
    Eigen::VectorXd rhs(npt);
    for (int i = 0; i < npt; ++i) {
        for (int c = 0; c < k; ++c)
            A(i, c) = std::pow(ys[i] / ymax, expos[c]);
        rhs(i) = us[i];
    }
    Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
    const double rms = std::sqrt((A * coef - rhs).squaredNorm() / npt);

    TraceExpansion out;
    out.v0 = coef(0);
    out.v1 = coef(1) / std::pow(ymax, g2);
    double scale = 1e-300;
    for (int c = 0; c < k; ++c) scale = std::max(scale, std::abs(coef(c)));
    out.fit_residual = rms / scale;
    return out;
}

// ---------------------------------------------------------------------------
// d_star extraction from bubble traces
// ---------------------------------------------------------------------------

TraceCalibration extract_d_star(const FracParams& p, double c_frac,
                                const std::vector<double>& lambdas,
                                const std::vector<double>& probe_dists, Budget& budget) {
    PoissonKernel K(p, budget);
    TraceCalibration out;
    const int npts = 12;
    for (double lam : lambdas) {
        Bubble b = make_bubble(Vec{0.0, 0.0, 0.0}, lam);
        for (double d : probe_dists) {
            const Vec x{d, 0.0, 0.0};
            const double w = std::sqrt(1.0 + sq(lam * d)) / lam;  // local expansion scale
            // The four-term basis truncates at y^{2+2g}; the neglected orders
            // bias the fitted y^{2g} coefficient by O(window^2) relative, so
            // the window must stay well below the expansion scale.
            const double y_hi = 0.03 * w;
            const double y_lo = y_hi / 15.0;
            std::vector<double> ys(npts), us(npts);
            for (int i = 0; i < npts; ++i) {
                ys[i] = y_lo * std::pow(y_hi / y_lo, static_cast<double>(i) / (npts - 1));
                QuadResult q = extend_bubble_convolution(K, b, ys[i], x,
                                                         QuadTol{1e-12, 2e-9}, budget);
                if (!q.converged) throw std::runtime_error("trace convolution exhausted budget");
                us[i] = q.value;
            }
            TraceExpansion fit = fit_trace_expansion(ys, us, p, 4);
            const double trace_val = eval_bubble(b, x, p);
            const double rhs = c_frac * std::pow(trace_val, p.critical_exponent);
            out.values.push_back(rhs / (2.0 * p.gamma * (-fit.v1)));
        }
    }
    const auto [mn, mx] = std::minmax_element(out.values.begin(), out.values.end());
    double mean = 0.0;
    for (double v : out.values) mean += v;
    mean /= static_cast<double>(out.values.size());
    out.d_star = mean;
    out.spread = (*mx - *mn) / mean;
    return out;
}

// ---------------------------------------------------------------------------
// Grid solver
// ---------------------------------------------------------------------------

namespace {

std::vector<double> graded_y_nodes(const FracParams& p, const GridSpec& spec) {
    const int J = spec.y_cells;
    std::vector<double> y(J + 1);
    // Cluster nodes at y = 0: the trace layer carries y^{2g} and y^2 corrections,
    // and only the pure y^{2g} profile is represented exactly by the edge model.
    const double expo = std::max(2.0, 1.0 / (2.0 - 2.0 * p.gamma));
    for (int j = 0; j <= J; ++j)
        y[j] = spec.box_y * std::pow(static_cast<double>(j) / J, expo);
    return y;
}

std::vector<double> uniform_r_nodes(const GridSpec& spec) {
    const int I = spec.r_cells;
    std::vector<double> r(I + 1);
    for (int i = 0; i <= I; ++i) r[i] = spec.box_r * static_cast<double>(i) / I;
    return r;
}

// conductances of the resistor network equivalent to the conservative scheme
struct Conductances {
    // cy[j][i]: edge (j,i)-(j+1,i), j in [0, J), i in [0, I]
    // cr[j][i]: edge (j,i)-(j,i+1), j in [0, J], i in [0, I)
    std::vector<double> cy, cr;
    int J = 0, I = 0;
    double y_edge(int j, int i) const { return cy[static_cast<size_t>(j) * (I + 1) + i]; }
    double r_edge(int j, int i) const { return cr[static_cast<size_t>(j) * I + i]; }
};

Conductances build_conductances(const FracParams& p, const std::vector<double>& y,
                                const std::vector<double>& r) {
    const int J = static_cast<int>(y.size()) - 1;
    const int I = static_cast<int>(r.size()) - 1;
    const double g2 = 2.0 * p.gamma;
    const double wexp = 2.0 - 2.0 * p.gamma;

    // dual r-volumes (r^{n-1} dr over the node cell, boundary cells are halves)
    std::vector<double> rvol(I + 1);
    for (int i = 0; i <= I; ++i) {
        const double lo = i == 0 ? 0.0 : 0.5 * (r[i - 1] + r[i]);
        const double hi = i == I ? r[I] : 0.5 * (r[i] + r[i + 1]);
        rvol[i] = (std::pow(hi, p.n) - std::pow(lo, p.n)) / p.n;
    }
    // dual y-volumes with the weight (y^{1-2g} dy over the node cell)
    std::vector<double> yvol(J + 1);
    for (int j = 0; j <= J; ++j) {
        const double lo = j == 0 ? 0.0 : 0.5 * (y[j - 1] + y[j]);
        const double hi = j == J ? y[J] : 0.5 * (y[j] + y[j + 1]);
        yvol[j] = (std::pow(hi, wexp) - std::pow(lo, wexp)) / wexp;
    }

    Conductances c;
    c.J = J;
    c.I = I;
    c.cy.resize(static_cast<size_t>(J) * (I + 1));
    c.cr.resize(static_cast<size_t>(J + 1) * I);
    for (int j = 0; j < J; ++j) {
        // integrated resistance of y^{1-2g}: exact for profiles a + b y^{2g}
        const double denom = (std::pow(y[j + 1], g2) - std::pow(y[j], g2)) / g2;
        for (int i = 0; i <= I; ++i)
            c.cy[static_cast<size_t>(j) * (I + 1) + i] = rvol[i] / denom;
    }
    for (int j = 0; j <= J; ++j) {
        for (int i = 0; i < I; ++i) {
            const double rf = 0.5 * (r[i] + r[i + 1]);
            c.cr[static_cast<size_t>(j) * I + i] =
                yvol[j] * std::pow(rf, p.n - 1.0) / (r[i + 1] - r[i]);
        }
    }
    return c;
}

}  // namespace

double HalfSpaceField::interpolate(double y, double r) const {
    const auto& yn = y_nodes;
    const auto& rn = r_nodes;
    if (y < yn.front() || y > yn.back() || r < rn.front() || r > rn.back())
        throw std::out_of_range("interpolation probe outside the grid box");
    const auto jy = std::upper_bound(yn.begin(), yn.end(), y) - yn.begin();
    const auto ir = std::upper_bound(rn.begin(), rn.end(), r) - rn.begin();
    const int j = std::min<int>(std::max<int>(static_cast<int>(jy) - 1, 0), spec.y_cells - 1);
    const int i = std::min<int>(std::max<int>(static_cast<int>(ir) - 1, 0), spec.r_cells - 1);
    const double ty = (y - yn[j]) / (yn[j + 1] - yn[j]);
    const double tr = (r - rn[i]) / (rn[i + 1] - rn[i]);
    return (1 - ty) * ((1 - tr) * at(j, i) + tr * at(j, i + 1)) +
           ty * ((1 - tr) * at(j + 1, i) + tr * at(j + 1, i + 1));
}

HalfSpaceField field_from_function(const std::function<double(double, double)>& fn,
                                   const FracParams& p, const GridSpec& spec,
                                   const std::string& provenance) {
    HalfSpaceField f;
    f.params = p;
    f.spec = spec;
    f.y_nodes = graded_y_nodes(p, spec);
    f.r_nodes = uniform_r_nodes(spec);
    f.values.resize(f.y_nodes.size() * f.r_nodes.size());
    f.provenance = provenance;
    for (int j = 0; j <= spec.y_cells; ++j)
        for (int i = 0; i <= spec.r_cells; ++i)
            f.at(j, i) = fn(f.y_nodes[j], f.r_nodes[i]);
    return f;
}

HalfSpaceField field_lincomb(double a, const HalfSpaceField& F, double b,
                             const HalfSpaceField& G) {
    if (F.values.size() != G.values.size())
        throw std::invalid_argument("field sizes differ");
    HalfSpaceField out = F;
    out.provenance = "closed_form";
    for (size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = a * F.values[k] + b * G.values[k];
    return out;
}

HalfSpaceField grid_solve_dirichlet(const std::function<double(double)>& trace_data,
                                    const std::function<double(double, double)>& far_data,
                                    const FracParams& p, const GridSpec& spec) {
    const int J = spec.y_cells, I = spec.r_cells;
    HalfSpaceField f;
    f.params = p;
    f.spec = spec;
    f.y_nodes = graded_y_nodes(p, spec);
    f.r_nodes = uniform_r_nodes(spec);
    f.values.assign(static_cast<size_t>(J + 1) * (I + 1), 0.0);
    f.provenance = "grid_solve";

    const auto& y = f.y_nodes;
    const auto& r = f.r_nodes;
    for (int i = 0; i <= I; ++i) f.at(0, i) = trace_data(r[i]);
    for (int i = 0; i <= I; ++i) f.at(J, i) = far_data(y[J], r[i]);
    for (int j = 1; j < J; ++j) f.at(j, I) = far_data(y[j], r[I]);

    Conductances c = build_conductances(p, y, r);

    // unknowns: j in [1, J-1], i in [0, I-1]
    const int nun = (J - 1) * I;
    auto idx = [&](int j, int i) { return (j - 1) * I + i; };
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(nun) * 5);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nun);

    for (int j = 1; j < J; ++j) {
        for (int i = 0; i < I; ++i) {
            double diag = 0.0;
            const int row = idx(j, i);
            auto couple = [&](double C, int ja, int ia) {
                diag += C;
                const bool interior = ja >= 1 && ja <= J - 1 && ia <= I - 1;
                if (interior)
                    trips.emplace_back(row, idx(ja, ia), -C);
                else
                    rhs(row) += C * f.at(ja, ia);
            };
            couple(c.y_edge(j - 1, i), j - 1, i);
            couple(c.y_edge(j, i), j + 1, i);
            if (i > 0) couple(c.r_edge(j, i - 1), j, i - 1);
            couple(c.r_edge(j, i), j, i + 1);
            trips.emplace_back(row, row, diag);
        }
    }

    Eigen::SparseMatrix<double> A(nun, nun);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("grid factorization failed");
    Eigen::VectorXd u = solver.solve(rhs);
    if (solver.info() != Eigen::Success) throw std::runtime_error("grid solve failed");

    for (int j = 1; j < J; ++j)
        for (int i = 0; i < I; ++i) f.at(j, i) = u(idx(j, i));
    return f;
}

double grid_operator_residual(const HalfSpaceField& f, double rho_min) {
    const int J = f.spec.y_cells, I = f.spec.r_cells;
    Conductances c = build_conductances(f.params, f.y_nodes, f.r_nodes);
    const double rho2_min = rho_min * rho_min;
    double worst = 0.0;
    for (int j = 1; j < J; ++j) {
        for (int i = 0; i < I; ++i) {
            const double y = f.y_nodes[j], r = f.r_nodes[i];
            if (y * y + r * r < rho2_min) continue;
            double imbalance = 0.0, csum = 0.0, scale = 0.0;
            auto add = [&](double C, int ja, int ia) {
                imbalance += C * (f.at(j, i) - f.at(ja, ia));
                csum += C;
                scale = std::max(scale, std::abs(f.at(ja, ia)));
            };
            add(c.y_edge(j - 1, i), j - 1, i);
            add(c.y_edge(j, i), j + 1, i);
            if (i > 0) add(c.r_edge(j, i - 1), j, i - 1);
            add(c.r_edge(j, i), j, i + 1);
            scale = std::max(scale, std::abs(f.at(j, i)));
            worst = std::max(worst, std::abs(imbalance) / (csum * std::max(scale, 1e-300)));
        }
    }
    return worst;
}

TraceExpansion neumann_trace(const HalfSpaceField& f, int i_column, double window,
                             int n_terms) {
    const int J = f.spec.y_cells;
    const double y1 = f.y_nodes[1];
    std::vector<double> ys, us;
    for (int j = 1; j < J; ++j) {
        if (f.y_nodes[j] > window * y1 && static_cast<int>(ys.size()) >= 5) break;
        ys.push_back(f.y_nodes[j]);
        us.push_back(f.at(j, i_column));
        if (static_cast<int>(ys.size()) >= 64) break;
    }
    return fit_trace_expansion(ys, us, f.params, n_terms);
}

double grid_energy(const HalfSpaceField& f, double rho_max) {
    const int J = f.spec.y_cells, I = f.spec.r_cells;
    Conductances c = build_conductances(f.params, f.y_nodes, f.r_nodes);
    const auto& y = f.y_nodes;
    const auto& r = f.r_nodes;
    auto inside = [&](double ym, double rm) {
        return rho_max <= 0.0 || std::hypot(ym, rm) <= rho_max;
    };
    double e = 0.0;
    for (int j = 0; j < J; ++j)
        for (int i = 0; i <= I; ++i)
            if (inside(0.5 * (y[j] + y[j + 1]), r[i]))
                e += c.y_edge(j, i) * sq(f.at(j + 1, i) - f.at(j, i));
    for (int j = 0; j <= J; ++j)
        for (int i = 0; i < I; ++i)
            if (inside(y[j], 0.5 * (r[i] + r[i + 1])))
                e += c.r_edge(j, i) * sq(f.at(j, i + 1) - f.at(j, i));
    // Edge conductances carry the radial measure r^{n-1} dr only; restore the
    // solid-angle factor so the result is the full half-space integral.
    return sphere_area(f.params.n) * e;
}

// ---------------------------------------------------------------------------
// Unit-bubble lift and extension energy
// ---------------------------------------------------------------------------

double FarFieldModel::operator()(double y, double r) const {
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    const double rho2 = y * y + r * r;
    const double lead = std::pow(rho2, -0.5 * (p.n - 2.0 * p.gamma));
    const double curv = (-m * r * r + (p.n * m / (2.0 - 2.0 * p.gamma)) * y * y) / sq(rho2);
    const double trace = vbar0 * std::pow(y / rho2, 2.0 * p.gamma);
    return lead * (1.0 + curv + trace);
}

double unit_bubble_vbar0(const FracParams& p, Budget& budget) {
    PoissonKernel K(p, budget);
    Bubble b = make_bubble(Vec{0.0, 0.0, 0.0}, 1.0);
    const int npts = 16;
    const double y_hi = 0.1, y_lo = y_hi / 15.0;
    std::vector<double> ys(npts), us(npts);
    for (int i = 0; i < npts; ++i) {
        ys[i] = y_lo * std::pow(y_hi / y_lo, static_cast<double>(i) / (npts - 1));
        QuadResult q =
            extend_bubble_convolution(K, b, ys[i], Vec{0, 0, 0}, QuadTol{1e-12, 5e-9}, budget);
        if (!q.converged) throw std::runtime_error("vbar0 convolution exhausted budget");
        us[i] = q.value;
    }
    return fit_trace_expansion(ys, us, p, 4).v1;
}

HalfSpaceField grid_lift_unit_bubble(const FracParams& p, const GridSpec& spec,
                                     double vbar0) {
    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    FarFieldModel model{p, vbar0};
    return grid_solve_dirichlet(
        [m](double r) { return std::pow(1.0 + r * r, -m); },
        [model](double y, double r) { return model(y, r); }, p, spec);
}

EnergyOracle extension_energy_bubble(const FracParams& p, Budget& budget, int y_cells,
                                     int r_cells, double box) {
    if (box <= 0.0) box = p.gamma > 0.5 ? 40.0 : 16.0;
    if (r_cells <= 0) r_cells = p.gamma > 0.5 ? 1024 : 768;
    const double rho_cut = 0.75 * box;

    EnergyOracle out;
    out.vbar0 = unit_bubble_vbar0(p, budget);
    out.rho_cut = rho_cut;

    GridSpec fine{y_cells, r_cells, box, box};
    GridSpec coarse{y_cells / 2, r_cells / 2, box, box};
    HalfSpaceField uf = grid_lift_unit_bubble(p, fine, out.vbar0);
    HalfSpaceField uc = grid_lift_unit_bubble(p, coarse, out.vbar0);
    const double ef = grid_energy(uf, rho_cut);
    const double ec = grid_energy(uc, rho_cut);
    out.bulk = ef + (ef - ec) / 3.0;

    // phi-integral of the closed-form model energy outside the quarter disc,
    // with the S^{n-1} angular factor of the x-plane
    const double g = p.gamma;
    const double m = 0.5 * (p.n - 2.0 * g);
    const double alpha = 2.0 * g - p.n;
    const double pc = -m, ps = p.n * m / (2.0 - 2.0 * g);
    const double vbar0 = out.vbar0;
    auto phi_integrand = [&](double phi) {
        const double sn = std::sin(phi), cs = std::cos(phi);
        const double P = pc * cs * cs + ps * sn * sn;
        const double dP = 2.0 * (ps - pc) * sn * cs;
        const double s2g = std::pow(sn, 2.0 * g);
        const double ds2g = sn > 0.0 ? 2.0 * g * std::pow(sn, 2.0 * g - 1.0) * cs : 0.0;
        auto f = [&](double t) {  // rho = rho_cut / t
            const double rho = rho_cut / t;
            const double drho = rho_cut / (t * t);
            const double du_drho = alpha * std::pow(rho, alpha - 1.0) +
                                   (alpha - 2.0) * P * std::pow(rho, alpha - 3.0) +
                                   (alpha - 2.0 * g) * vbar0 * s2g *
                                       std::pow(rho, alpha - 2.0 * g - 1.0);
            const double du_dphi =
                dP * std::pow(rho, alpha - 2.0) + vbar0 * ds2g * std::pow(rho, alpha - 2.0 * g);
            const double grad2 = sq(du_drho) + sq(du_dphi / rho);
            const double meas =
                std::pow(rho * sn, 1.0 - 2.0 * g) * std::pow(rho * cs, p.n - 1.0) * rho;
            return grad2 * meas * drho;
        };
        QuadResult q = gk_adaptive(f, 0.0, 1.0, QuadTol{1e-13, 1e-10}, budget);
        return q.value;
    };
    QuadResult tail =
        gk_adaptive(phi_integrand, 0.0, 0.5 * kPi, QuadTol{1e-11, 1e-9}, budget);
    out.tail = sphere_area(p.n) * tail.value;

    out.value = out.bulk + out.tail;
    out.richardson_gap = std::abs(ef - ec) / (3.0 * out.value);
    out.tail_fraction = out.tail / out.value;
    return out;
}

// ---------------------------------------------------------------------------
// Green's function
// ---------------------------------------------------------------------------

double green_constant(const FracParams& p, double d_star, Budget& budget) {
    auto f = [&](double phi) {
        return std::pow(std::cos(phi), 1.0 - 2.0 * p.gamma) *
               std::pow(std::sin(phi), p.n - 1.0);
    };
    QuadResult I_ang = gk_adaptive(f, 0.0, 0.5 * kPi, QuadTol{1e-13, 1e-11}, budget);
    if (!I_ang.converged) throw std::runtime_error("flux-balance quadrature exhausted");
    const double ang = sphere_area(p.n) * I_ang.value;
    return 1.0 / (d_star * (p.n - 2.0 * p.gamma) * ang);
}

double green_flat(const FracParams& p, double g_green, double y, const Vec& x,
                  const Vec& xi) {
    const double q = y * y + norm2(sub(x, xi), p.n);
    if (q <= 0.0) throw std::domain_error("evaluation at the pole");
    return g_green * std::pow(q, -0.5 * (p.n - 2.0 * p.gamma));
}

// ---------------------------------------------------------------------------
// Pointwise estimate sweeps
// ---------------------------------------------------------------------------

namespace {

struct ConvProbe {
    const PoissonKernel* K;
    const Bubble* b;
    QuadTol tol;
    Budget* budget;
    double operator()(double y, double d1, double d2) const {
        QuadResult q = extend_bubble_convolution(*K, *b, y, Vec{d1, d2, 0.0}, tol, *budget);
        return q.value;
    }
};

}  // namespace

RoughEstimateReport check_rough_estimates(const FracParams& p, double lambda,
                                          Budget& budget) {
    PoissonKernel K(p, budget);
    Bubble b = make_bubble(Vec{0, 0, 0}, lambda);
    ConvProbe u{&K, &b, QuadTol{1e-12, 1e-7}, &budget};

    const double m = 0.5 * (p.n - 2.0 * p.gamma);
    const double g2 = 2.0 * p.gamma;
    auto peak = [&](double ra, double expo) {
        return std::pow(lambda / (1.0 + sq(lambda * ra)), expo);
    };

    RoughEstimateReport rep;
    const double hx = 1e-2 / lambda;
    const std::vector<double> ys{0.05, 0.3, 1.0};
    const std::vector<double> ds{0.0, 0.5, 2.0};

    auto track_fd = [&](double coarse, double fine, double scale) {
        const double mism = std::abs(coarse - fine) / std::max(std::abs(fine), 1e-3 * scale);
        rep.fd_mismatch = std::max(rep.fd_mismatch, mism);
    };

    for (double y : ys) {
        for (double d : ds) {
            const double ra = std::hypot(y, d);
            const double u0 = u(y, d, 0);
            rep.ratio_value = std::max(rep.ratio_value, u0 / peak(ra, m));

            const double hy = std::min(hx, 0.5 * y);
            const double dy_h = (u(y + hy, d, 0) - u(y - hy, d, 0)) / (2 * hy);
            const double dy_h2 = (u(y + 0.5 * hy, d, 0) - u(y - 0.5 * hy, d, 0)) / hy;
            const double bound_dy =
                std::pow(lambda, p.gamma) * std::pow(y, g2 - 1.0) * peak(ra, 0.5 * p.n);
            rep.ratio_dy = std::max(rep.ratio_dy, std::abs(dy_h2) / bound_dy);
            track_fd(dy_h, dy_h2, bound_dy);

            const double dx_h = (u(y, d + hx, 0) - u(y, d - hx, 0)) / (2 * hx);
            const double dx_h2 = (u(y, d + 0.5 * hx, 0) - u(y, d - 0.5 * hx, 0)) / hx;
            const double bound_dx =
                std::sqrt(lambda) * peak(ra, 0.5 * (p.n + 1.0 - g2));
            rep.ratio_dx = std::max(rep.ratio_dx, std::abs(dx_h2) / bound_dx);
            track_fd(dx_h, dx_h2, bound_dx);
            if (d == 0.0)
                rep.radial_gradient = std::max(rep.radial_gradient, std::abs(dx_h2));

            // axis-aligned second differences; transverse entry via the x2 axis
            const double h2 = std::sqrt(hx * std::max(0.03, 0.3 * ra));
            const double d11 = (u(y, d + h2, 0) - 2 * u0 + u(y, d - h2, 0)) / sq(h2);
            const double d22 = (u(y, d, h2) - 2 * u0 + u(y, d, -h2)) / sq(h2);
            const double bound_dxx = lambda * peak(ra, 0.5 * (p.n + 2.0 - g2));
            rep.ratio_dxx =
                std::max(rep.ratio_dxx, std::max(std::abs(d11), std::abs(d22)) / bound_dxx);
        }
    }

    // y-derivative scaling inside the boundary layer (y * lambda << 1) above the
    // center.  The finite difference of the profile behaves like A y^{2g-1} + B y
    // (trace layer plus smooth quadratic term); the three-point ratio below cancels
    // the linear part exactly, leaving the layer exponent up to O(y^2) corrections.
    {
        double dy[3];
        for (int k = 0; k < 3; ++k) {
            const double y = 0.01 * (1 << k) / lambda;
            dy[k] = (u(1.5 * y, 0, 0) - u(0.5 * y, 0, 0)) / y;
        }
        rep.dy_slope = std::log2((dy[2] - 2.0 * dy[1]) / (dy[1] - 2.0 * dy[0]));
    }
    return rep;
}

SharpEstimateReport check_sharp_estimates(const FracParams& p, double lambda,
                                          double r_probe, Budget& budget) {
    PoissonKernel K(p, budget);
    Bubble b = make_bubble(Vec{0, 0, 0}, lambda);
    ConvProbe u{&K, &b, QuadTol{1e-13, 1e-8}, &budget};

    const double nm2g = p.n - 2.0 * p.gamma;
    const double scale = std::pow(lambda, -0.5 * nm2g);
    auto lead = [&](double ra) { return scale * std::pow(ra, -nm2g); };

    SharpEstimateReport rep;
    for (double psi : {20.0, 50.0, 80.0}) {
        const double th = psi * kPi / 180.0;
        const double y = r_probe * std::sin(th), d = r_probe * std::cos(th);
        const double ra = r_probe;

        const double u0 = u(y, d, 0);
        rep.dev_value = std::max(rep.dev_value, std::abs(u0 - lead(ra)) / scale);

        const double hy = 1e-3 * y;
        const double dy = (u(y + hy, d, 0) - u(y - hy, d, 0)) / (2 * hy);
        const double lead_ydy = -nm2g * y * y * scale * std::pow(ra, -nm2g - 2.0);
        rep.dev_ydy = std::max(rep.dev_ydy, std::abs(y * dy - lead_ydy) / scale);

        const double hx = 1e-3 * std::max(d, 0.1);
        const double dx = (u(y, d + hx, 0) - u(y, d - hx, 0)) / (2 * hx);
        const double lead_xdx = -nm2g * d * d * scale * std::pow(ra, -nm2g - 2.0);
        rep.dev_xdx = std::max(rep.dev_xdx, std::abs(d * dx - lead_xdx) / scale);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

void write_halfspace_csv(const HalfSpaceField& f, const std::string& csv_path,
                         const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path);
    csv << "y,r,value\n";
    char buf[96];
    for (int j = 0; j <= f.spec.y_cells; ++j)
        for (int i = 0; i <= f.spec.r_cells; ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", f.y_nodes[j], f.r_nodes[i],
                          f.at(j, i));
            csv << buf;
        }

    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot open " + json_path);
    char jbuf[512];
    std::snprintf(jbuf, sizeof jbuf,
                  "{\n  \"n\": %d,\n  \"gamma\": %.12g,\n  \"y_cells\": %d,\n"
                  "  \"r_cells\": %d,\n  \"box_y\": %.12g,\n  \"box_r\": %.12g,\n"
                  "  \"provenance\": \"%s\"\n}\n",
                  f.params.n, f.params.gamma, f.spec.y_cells, f.spec.r_cells, f.spec.box_y,
                  f.spec.box_r, f.provenance.c_str());
    js << jbuf;
}

}  // namespace fracbubble
