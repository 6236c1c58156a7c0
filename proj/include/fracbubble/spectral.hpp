#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "fracbubble/params.hpp"

namespace fracbubble {

// ---------------------------------------------------------------------------
// Exact integer-coefficient polynomials in the boundary variables
// ---------------------------------------------------------------------------

// Sparse polynomial in up to three variables with exact 64-bit integer
// coefficients; monomials keyed by their exponent triple. Degrees stay <= 6
// and coefficients tiny, so plain integers are exact throughout.
struct XPoly {
    std::map<std::array<int, 3>, long long> terms;

    bool is_zero() const { return terms.empty(); }
    int degree() const;
    double eval(const Vec& x) const;

    friend bool operator==(const XPoly& a, const XPoly& b) { return a.terms == b.terms; }
};

XPoly xpoly_monomial(int e0, int e1, int e2, long long c);
XPoly xpoly_add(const XPoly& a, const XPoly& b);
XPoly xpoly_scale(const XPoly& a, long long c);
XPoly xpoly_mul(const XPoly& a, const XPoly& b);
XPoly xpoly_laplacian(const XPoly& a, int n);
// (x_0^2 + ... + x_{n-1}^2)^k expanded with exact multinomial coefficients.
XPoly xpoly_radial_even(int n, int k);

// ---------------------------------------------------------------------------
// Harmonics of the weighted flux operator on the half space
// ---------------------------------------------------------------------------

// The two boundary families killed by L = d_y(y^{1-2g} d_y .) + y^{1-2g} Lap_x:
//   neumann:    sum_l y^{2l}      P_{m-2l}(x)   (weighted flux vanishes at y=0)
//   dirichlet:  sum_l y^{2g+2l}   P_{m-2l}(x)   (value vanishes at y=0)
enum class HarmonicFamily { neumann, dirichlet };

// One constructed harmonic. The level-l coefficient polynomial is
// levels[l] / denom(l) with exact integer levels[l] = (-1)^l Lap^l(seed) and
// denom(l) = prod_{j=1..l} (2j) * (2j - 2g)   [neumann]
//            prod_{j=1..l} (2j) * (2j + 2g)   [dirichlet],
// the unique ladder solving L(A) = 0 from the degree-m seed. Everything is
// homogeneous: total degree = m (neumann) or m + 2g (dirichlet).
struct DHarmonic {
    HarmonicFamily family = HarmonicFamily::neumann;
    int n = 2;
    int m = 0;
    double gamma = 0.25;
    double degree = 0.0;
    std::vector<XPoly> levels;

    // Denominator of level l at this gamma; throws if a ladder factor
    // vanishes (possible only outside gamma in (0,1)).
    double level_denominator(int l) const;

    double eval(double y, const Vec& x) const;
    double eval_dy(double y, const Vec& x) const;
    double eval_dyy(double y, const Vec& x) const;
    double eval_lap_x(double y, const Vec& x) const;
};

// Builds the degree-m harmonic from the built-in homogeneous seed |x|^m
// (even m) or x_0 |x|^{m-1} (odd m). Degree cap m <= 6; the dirichlet family
// requires near_half to be false (at gamma = 1/2 it merges with the integer
// family).
DHarmonic build_dharmonic(HarmonicFamily family, int m, const FracParams& p);

// Exact construction audit: L(A) = 0 holds identically in (y, x, gamma) iff
// every level satisfies levels[l+1] + Lap(levels[l]) = 0 and the last level
// is annihilated by Lap. Returns the largest absolute integer coefficient of
// those defect polynomials: zero means identically flux-harmonic.
long long dharmonic_symbolic_residual(const DHarmonic& h);

// Pointwise numeric audit of the same fact in floating point:
// |A_yy + (1-2g)/y A_y + Lap_x A| at (y, x), scaled by the term magnitudes.
double dharmonic_flux_residual(const DHarmonic& h, double y, const Vec& x);

// ---------------------------------------------------------------------------
// Eigenvalue law on the weighted half sphere
// ---------------------------------------------------------------------------

// Degree-k homogeneous flux-harmonics restrict to eigenfunctions on the unit
// half sphere with eigenvalue k (k + n - 2g).
double eigenvalue_law(double k, const FracParams& p);

struct SphereCheck {
    double max_residual = 0.0;  // worst scaled pointwise defect
    int points = 0;
};

// Verifies -div_S(eta^{1-2g} grad_S e) = eigenvalue * eta^{1-2g} e for the
// restriction e of h to the unit upper half sphere, at `npoints` quasi-random
// sphere points with height eta >= eta_min. All derivatives are closed-form
// (ambient partials plus homogeneity), no differencing.
SphereCheck check_sphere_eigen(const DHarmonic& h, int npoints = 100,
                               double eta_min = 0.1);

// ---------------------------------------------------------------------------
// Boundary-problem solvability expressions
// ---------------------------------------------------------------------------

// Dirichlet-data obstruction: (m' + 2g)(m' + n) - (m - n + 1)(m + 1 - 2g).
double solvability_dirichlet(long long m_prime, long long m, const FracParams& p);
// Neumann-data obstruction: m'(m' + n - 2g) - (m - n + 1 + 2g)(m + 1).
double solvability_neumann(long long m_prime, long long m, const FracParams& p);

struct SolvabilityScan {
    double min_abs = 0.0;  // smallest |expression| over the scanned square
    long long arg_m_prime = 0;
    long long arg_m = 0;
};

// Scans m', m in [0, bound]^2 and reports how close the expression comes to
// zero (families keyed by the matching boundary condition).
SolvabilityScan solvability_scan(HarmonicFamily which, int bound,
                                 const FracParams& p);

// All integer pairs (m', m) within [0, bound]^2 where the expression vanishes
// exactly at gamma = 1/2 (evaluated in integer arithmetic). Bound cap 1000.
std::vector<std::pair<long long, long long>> find_half_degeneracy(
    HarmonicFamily which, int n, int bound);

// True when the gamma = 1/2 zero at (m', m) is a simple crossing: the
// expression changes sign between gamma = 0.49 and gamma = 0.51.
bool crossing_is_simple(HarmonicFamily which, long long m_prime, long long m,
                        int n);

// JSON export of a degeneracy search result (deterministic field order).
void write_degeneracy_json(HarmonicFamily which, int n, int bound,
                           const std::vector<std::pair<long long, long long>>& pairs,
                           std::ostream& os);

}  // namespace fracbubble
