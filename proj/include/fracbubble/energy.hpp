#pragma once

#include <iosfwd>
#include <vector>

#include "fracbubble/params.hpp"
#include "fracbubble/quad.hpp"

namespace fracbubble {

// Weighted bubble sum u = sum_i alpha_i * delta_{a_i, lambda_i}.
struct BubbleSum {
    FracParams params;
    std::vector<double> alphas;
    std::vector<Bubble> bubbles;
};

// Validates: non-empty, matching lengths, every alpha positive and finite.
BubbleSum make_bubble_sum(const FracParams& p, std::vector<double> alphas,
                          std::vector<Bubble> bubbles);

double eval_bubble_sum(const BubbleSum& u, const Vec& x);

// Oracle choice for the diagonal (self) energies e(b, b):
//   spectral   c_frac * c1: the multiplier-normalized operator applied to a
//              bubble collapses through the verified bubble equation, leaving
//              the PV-ratio constant times the volume integral
//   extension  d_star * weighted-gradient energy of the half-space grid lift
// Cross terms use the self-adjointness identity
//   e(b_i, b_j) = c_frac * int delta_i^{p_crit} delta_j
// under both routes; the route therefore changes exactly the part the two
// formulations disagree on, making route agreement a real check.
enum class EnergyRoute { spectral, extension };

struct QuadraticBreakdown {
    double value = 0.0;         // <u, u>
    double self_energy = 0.0;   // e(b, b), the same for every term by scaling
    std::vector<double> cross;  // e(b_i, b_j) for i < j, row-major upper triangle
    bool converged = true;
};

// <u,u> = sum_ij alpha_i alpha_j e(b_i, b_j). Each unordered pair is
// integrated once. Self energies come from the cached constant set (their
// oracle cost is amortized, not drawn from `budget`); pair integrals draw
// from `budget`. Throws std::domain_error inside the gamma = 1/2 guard band
// and std::runtime_error when the route's resolution gate fails.
QuadraticBreakdown quadratic_form(const BubbleSum& u, EnergyRoute route, QuadTol tol,
                                  Budget& budget);

// int u^{2n/(n-2g)} by adaptive quadrature: radial for a single bubble,
// separation-axis + transverse-radius reduction for two, iterated
// full-dimension quadrature for three or more.
QuadResult volume_integral(const BubbleSum& u, QuadTol tol, Budget& budget);

struct EnergyReport {
    double quadratic = 0.0;
    double volume = 0.0;
    double quotient = 0.0;  // quadratic / volume^{(n-2g)/n}
    bool converged = true;
};

EnergyReport yamabe_quotient(const BubbleSum& u, QuadTol tol, Budget& budget,
                             EnergyRoute route = EnergyRoute::spectral);

// Vertices of a regular (p-1)-simplex with edge length `edge`, barycenter at
// the origin, embedded in R^n. Requires 2 <= p <= n+1 (p equidistant points
// need p-1 dimensions), hence p <= 4 here.
std::vector<Vec> simplex_vertices(int p, double edge, int n);

struct SweepRow {
    int p = 0;
    double sep = 0.0;
    double eps_sum = 0.0;          // sum_{i != j} eps_{i,j} (ordered pairs)
    double quotient = 0.0;
    double bound = 0.0;            // p^{2g/n} * yamabe_sphere
    double deficit = 0.0;          // bound - quotient
    double deficit_per_eps = 0.0;  // deficit / eps_sum
};

// Equal-weight unit-coefficient bubbles at the vertices of a regular simplex
// with edge `sep`, all at scale `lambda`; one row per separation.
std::vector<SweepRow> barycenter_sweep(int p, const std::vector<double>& seps,
                                       double lambda, const FracParams& prm,
                                       QuadTol tol, Budget& budget);

// Header "p,sep,eps_sum,quotient,bound,deficit,deficit_per_eps", one row per
// entry, %.12g fields, LF line endings.
void write_barycenter_csv(const std::vector<SweepRow>& rows, std::ostream& os);

}  // namespace fracbubble
