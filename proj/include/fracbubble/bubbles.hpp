#pragma once

#include "fracbubble/frac_laplacian.hpp"
#include "fracbubble/params.hpp"
#include "fracbubble/quad.hpp"

namespace fracbubble {

// delta_{a,lam}(x) = (lam / (1 + lam^2 |x-a|^2))^{(n-2g)/2}
double eval_bubble(const Bubble& b, const Vec& x, const FracParams& p);

// Same bubble as a ScalarField with analytic Laplacian (for the PV oracle).
ScalarField bubble_field(const Bubble& b, const FracParams& p);

// Laplacian of the bubble at x (analytic).
double bubble_laplacian(const Bubble& b, const Vec& x, const FracParams& p);

// Ratio oracle for the bubble equation: r(x) = (-Delta)^g delta / delta^p
// over a fixed 5-point stencil along e1 through the center. The mean ratio
// on the reference bubble (a, lam) = (0, 1) is the canonical nonlinearity
// constant; max_rel_dev measures constancy.
struct PdeResidual {
    double mean_ratio = 0.0;
    double max_rel_dev = 0.0;
    std::vector<double> ratios;
    std::vector<double> pv_errors;  // PV error estimates per stencil point
    bool converged = true;
};

PdeResidual bubble_pde_residual(const Bubble& b, const FracParams& p,
                                QuadTol tol, Budget& budget);

// Stencil offsets (in units of 1/lam along e1) used by the ratio oracle.
std::vector<double> pde_stencil_offsets();

// Volume constant: int_{R^n} (1 + |x|^2)^{-n} dx by radial quadrature.
QuadResult c1_oracle(const FracParams& p, QuadTol tol, Budget& budget);

// Kernel constant: int_{R^n} (1 + |x|^2)^{-(n+2g)/2} dx by radial quadrature.
QuadResult c3_oracle(const FracParams& p, QuadTol tol, Budget& budget);

}  // namespace fracbubble
