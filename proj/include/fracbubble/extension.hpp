#pragma once

#include "bubbles.hpp"
#include "params.hpp"
#include "quad.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fracbubble {

// Poisson kernel of the weighted half-space operator -div(y^{1-2g} grad .):
//   K(y, x, xi) = p_norm * y^{2g} / (|x-xi|^2 + y^2)^{(n+2g)/2},
// normalized so the boundary mass of K(y, ., xi) is 1 for every y > 0.
class PoissonKernel {
public:
    PoissonKernel(const FracParams& p, Budget& budget);  // p_norm = 1/c3 by quadrature
    PoissonKernel(const FracParams& p, double p_norm);   // reuse a known normalization

    double operator()(double y, const Vec& x, const Vec& xi) const;
    double radial(double y, double dist) const;

    double norm_constant() const { return p_norm_; }
    const FracParams& params() const { return p_; }

private:
    FracParams p_;
    double p_norm_;
};

// Boundary mass of the kernel at height y (1 for all y when correctly normalized).
QuadResult kernel_mass(const PoissonKernel& K, double y, QuadTol tol, Budget& budget);

// Convolution lift of a bubble to the half-space point (y, x).
// At y = 0 returns the bubble value directly.
QuadResult extend_bubble_convolution(const PoissonKernel& K, const Bubble& b, double y,
                                     const Vec& x, QuadTol tol, Budget& budget);

// Convolution lift of radial boundary data f(|xi|) (compactly supported or decaying
// faster than |xi|^{2g-n} after windowing) to the half-space point (y, r e1).
QuadResult extend_radial_convolution(const PoissonKernel& K,
                                     const std::function<double(double)>& data, double y,
                                     double r, double support_radius, QuadTol tol,
                                     Budget& budget,
                                     const std::vector<double>& s_hints = {});

// Local boundary expansion u(y) ~ v0 + v1 y^{2g} (+ optional even correction a2 y^2).
struct TraceExpansion {
    double v0 = 0.0;
    double v1 = 0.0;
    double fit_residual = 0.0;  // RMS residual / fitted-value scale
};

// n_terms in [2,4] selects how many of the exponents {0, 2g, 2, 2+2g} are fit.
TraceExpansion fit_trace_expansion(const std::vector<double>& ys,
                                   const std::vector<double>& us, const FracParams& p,
                                   int n_terms);

// Weighted-trace calibration: the identity
//   -d_star * lim_{y->0} y^{1-2g} dy u = c_frac * u(.,0)^{p_crit}
// for bubble lifts determines d_star; consistency across scales/probes is its gate.
struct TraceCalibration {
    double d_star = 0.0;
    double spread = 0.0;          // (max - min)/mean over extractions
    std::vector<double> values;   // one extraction per (lambda, probe)
};

TraceCalibration extract_d_star(const FracParams& p, double c_frac,
                                const std::vector<double>& lambdas,
                                const std::vector<double>& probe_dists, Budget& budget);

// ---------------------------------------------------------------------------
// Grid solver for the radial Dirichlet problem of -div(y^{1-2g} grad .).
// ---------------------------------------------------------------------------

struct GridSpec {
    int y_cells = 256;   // graded intervals in y: y_j = Y (j/J)^{1/(2-2g)}
    int r_cells = 512;   // uniform intervals in r
    double box_y = 8.0;
    double box_r = 8.0;
};

struct HalfSpaceField {
    FracParams params;
    GridSpec spec;
    std::vector<double> y_nodes;  // size y_cells+1, starts at 0
    std::vector<double> r_nodes;  // size r_cells+1, starts at 0
    std::vector<double> values;   // (y_cells+1) * (r_cells+1), y-major
    std::string provenance;       // "grid_solve" | "convolution" | "closed_form"

    double at(int j, int i) const { return values[static_cast<size_t>(j) * (spec.r_cells + 1) + i]; }
    double& at(int j, int i) { return values[static_cast<size_t>(j) * (spec.r_cells + 1) + i]; }
    double interpolate(double y, double r) const;  // bilinear
};

// Sample a closed-form field onto the graded grid.
HalfSpaceField field_from_function(const std::function<double(double, double)>& fn,
                                   const FracParams& p, const GridSpec& spec,
                                   const std::string& provenance = "closed_form");

// Pointwise linear combination of two fields on the same grid.
HalfSpaceField field_lincomb(double a, const HalfSpaceField& F, double b,
                             const HalfSpaceField& G);

// Solve the Dirichlet problem: data on y = 0, far_data on the top/side boundary.
// Conservative flux discretization; the y-conductance between consecutive nodes is the
// integrated resistance of y^{1-2g}, which makes a + b y^{2g} an exact discrete solution.
HalfSpaceField grid_solve_dirichlet(const std::function<double(double)>& trace_data,
                                    const std::function<double(double, double)>& far_data,
                                    const FracParams& p, const GridSpec& spec);

// Max absolute residual of the discrete flux balance on a sampled field
// (interior nodes only; used to check closed-form solutions and consistency order).
// Nodes with sqrt(y^2 + r^2) < rho_min are skipped, so singular fields can be
// checked away from their pole.
double grid_operator_residual(const HalfSpaceField& f, double rho_min = 0.0);

// Boundary expansion fitted over the window y in [y_1, window * y_1] of one column.
TraceExpansion neumann_trace(const HalfSpaceField& f, int i_column, double window = 10.0,
                             int n_terms = 2);

// Resistor-network Dirichlet energy sum_edges C (du)^2 of a grid field; when
// rho_max > 0 only edges with midpoint radius |(y,r)| <= rho_max contribute.
double grid_energy(const HalfSpaceField& f, double rho_max = 0.0);

// ---------------------------------------------------------------------------
// Bubble lift on the grid and the extension-energy constant.
// ---------------------------------------------------------------------------

// Far-field model of the unit-bubble lift used for box boundary data and the energy
// tail: inversion z -> z/|z|^2 maps the far field onto the local boundary expansion
//   u(zeta) ~ 1 - m |xi|^2 + (n m /(2-2g)) y^2 + vbar0 y^{2g},  m = (n-2g)/2.
struct FarFieldModel {
    FracParams p;
    double vbar0;  // y^{2g} trace coefficient of the unit bubble at the origin
    double operator()(double y, double r) const;
};

// vbar0 via convolution traces at the bubble center.
double unit_bubble_vbar0(const FracParams& p, Budget& budget);

// Grid lift of the lambda = 1 bubble with model far-field data.
HalfSpaceField grid_lift_unit_bubble(const FracParams& p, const GridSpec& spec,
                                     double vbar0);

struct EnergyOracle {
    double value = 0.0;           // weighted Dirichlet energy of the unit-bubble lift
    double bulk = 0.0;            // resistor-network energy inside rho <= rho_cut
    double tail = 0.0;            // closed-form model energy outside rho_cut
    double richardson_gap = 0.0;  // |extrapolation correction| / value
    double tail_fraction = 0.0;
    double vbar0 = 0.0;
    double rho_cut = 0.0;
};

// Energy of the unit-bubble lift: int y^{1-2g} |grad u|^2 over the half-space,
// via grid bulk + model tail + two-grid Richardson extrapolation.
EnergyOracle extension_energy_bubble(const FracParams& p, Budget& budget,
                                     int y_cells = 256, int r_cells = 0, double box = 0.0);

// ---------------------------------------------------------------------------
// Green's function of the dual problem.
// ---------------------------------------------------------------------------

// Flux balance through a hemisphere around the pole fixes the constant:
//   g = 1 / (d_star * (n-2g) * I_ang),  I_ang = |S^{n-1}| int_0^{pi/2} cos^{1-2g} sin^{n-1}.
double green_constant(const FracParams& p, double d_star, Budget& budget);

double green_flat(const FracParams& p, double g_green, double y, const Vec& x,
                  const Vec& xi);

// ---------------------------------------------------------------------------
// Pointwise estimate sweeps for bubble lifts.
// ---------------------------------------------------------------------------

struct RoughEstimateReport {
    double ratio_value = 0.0;     // max |u| / bound over the sample set
    double ratio_dy = 0.0;        // same for dy u
    double ratio_dx = 0.0;        // same for grad_x u
    double ratio_dxx = 0.0;       // same for the x-Hessian
    double dy_slope = 0.0;        // log-log y-slope of dy u near y = 0 (expect 2g-1)
    double radial_gradient = 0.0; // |dx1 u| at the symmetry point (expect ~ 0)
    double fd_mismatch = 0.0;     // max relative step-halving mismatch of the FD stencils
};

RoughEstimateReport check_rough_estimates(const FracParams& p, double lambda,
                                          Budget& budget);

struct SharpEstimateReport {
    double dev_value = 0.0;  // max relative deviation of u from the leading far term
    double dev_ydy = 0.0;    // same for y dy u (normalized by the leading scale)
    double dev_xdx = 0.0;    // same for x . grad_x u
};

SharpEstimateReport check_sharp_estimates(const FracParams& p, double lambda,
                                          double r_probe, Budget& budget);

// ---------------------------------------------------------------------------
// Export.
// ---------------------------------------------------------------------------

void write_halfspace_csv(const HalfSpaceField& f, const std::string& csv_path,
                         const std::string& json_path);

}  // namespace fracbubble
