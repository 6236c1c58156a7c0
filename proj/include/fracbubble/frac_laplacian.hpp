#pragma once

#include <functional>

#include "fracbubble/params.hpp"
#include "fracbubble/quad.hpp"

namespace fracbubble {

// Scalar field on R^n with enough structure for the PV oracle: values, an
// (optionally analytic) Laplacian for the inner Taylor correction, a
// characteristic small scale, and feature points for panel splitting.
struct ScalarField {
    std::function<double(const Vec&)> value;
    std::function<double(const Vec&)> laplacian;  // empty -> central differences
    double width = 1.0;                           // smallest feature scale
    std::vector<Vec> features;                    // peak locations, if any
};

// (-Delta)^gamma u at x through the principal-value integral
//   C(n,g) pv int (u(x) - u(xi)) / |x - xi|^{n+2g} dxi
// with C(n,g) the constant making the Fourier multiplier |xi|^{2g}
// (validated independently by the spectral oracle). The ball of radius
// 1e-3 * width around x is handled by a second-order Taylor correction;
// the far tail by an exact split of the u(x) part plus a compactified
// integral of the angular average.
QuadResult frac_laplacian_pv(const ScalarField& u, const Vec& x, const FracParams& p,
                             QuadTol tol, Budget& budget);

// Multiplier normalization constant C(n,g) of the PV integral.
double pv_normalization(int n, double gamma);

// Spectral oracle: sample u on a periodic grid over [-L,L)^n, apply the
// |xi|^{2g} multiplier in Fourier space, read off the node nearest to x.
// richardson_gap compares against the same computation at half resolution;
// boundary_ratio = max boundary-face |u| / max |u| flags a too-small box.
struct SpectralValue {
    double value = 0.0;
    double coarse_value = 0.0;
    double richardson_gap = 0.0;  // |fine-coarse| / max(|fine|, 1e-300)
    double boundary_ratio = 0.0;
    Vec snapped = {};             // grid node actually evaluated
    bool box_ok = true;           // boundary_ratio below threshold
};

SpectralValue frac_laplacian_spectral(const std::function<double(const Vec&)>& u,
                                      const Vec& x, const FracParams& p,
                                      double half_width, int grid_n,
                                      double boundary_threshold = 1e-2);

}  // namespace fracbubble
