#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "fracbubble/params.hpp"
#include "fracbubble/quad.hpp"

namespace fracbubble {

// ---------------------------------------------------------------------------
// Closed-form pair quantities
// ---------------------------------------------------------------------------

// Coupling argument of two bubbles:
//   S = li/lj + lj/li + li*lj*|ai - aj|^2,  always >= 2.
double pair_coupling(const Bubble& bi, const Bubble& bj, int n);

// Interaction functional eps_{i,j} = S^{-(n-2g)/2}. Invariant under the
// joint rescaling (a -> s*a, lambda -> lambda/s); range (0, 2^{-(n-2g)/2}].
double epsilon_ij(const Bubble& bi, const Bubble& bj, const FracParams& p);

// Scale disparity q = min(li/lj, lj/li) in (0,1]; enters every error scale.
double pair_scale_ratio(const Bubble& bi, const Bubble& bj);

// Which functional of the pair integral I = int delta_i^p delta_j is meant:
//   value       I itself
//   dlambda_i   lambda_i * d/dlambda_i I   (scale derivative, bubble i)
//   dlambda_j   lambda_j * d/dlambda_j I   (scale derivative, bubble j)
//   grad_a      d/da_i I, signed component along the separation axis
//   hess_long   (d/da_i)^2 I, eigenvalue along the separation axis
//   hess_trans  (d/da_i)^2 I, eigenvalue across the separation axis
enum class InteractionOrder { value, dlambda_i, dlambda_j, grad_a, hess_long, hess_trans };

// Leading asymptotic term (the same functional applied to c3 * eps_{i,j})
// and the predicted magnitude of its error:
//   value / dlambda_*:  q^g * eps^{n/(n-2g)}
//   grad_a:             q^g * sqrt(li*lj) * eps^{(n+1)/(n-2g)}
//   hess_*:             q^g * li*lj * eps^{(n+2)/(n-2g)}
struct AsymptoticTerm {
    double value = 0.0;
    double error_scale = 0.0;
};

AsymptoticTerm interaction_asymptotic(const Bubble& bi, const Bubble& bj,
                                      const FracParams& p, InteractionOrder order,
                                      double c3);

// Full vector / matrix forms of the leading derivative terms (with respect
// to the center of bubble i); hessian is row-major n x n in a 3 x 3 buffer.
Vec interaction_grad_leading(const Bubble& bi, const Bubble& bj,
                             const FracParams& p, double c3);
std::array<double, 9> interaction_hess_leading(const Bubble& bi, const Bubble& bj,
                                               const FracParams& p, double c3);

// ---------------------------------------------------------------------------
// Quadrature oracles
// ---------------------------------------------------------------------------

// int_{R^n} delta_i^alpha * delta_j^beta by reduction to the separation axis
// plus the transverse radius. Requires (n-2g)(alpha+beta) > n (integrability).
QuadResult pair_power_integral(const Bubble& bi, const Bubble& bj, double alpha,
                               double beta, const FracParams& p, QuadTol tol,
                               Budget& budget);

// The critical pair integral int delta_i^{p_crit} delta_j.
QuadResult interaction_oracle(const Bubble& bi, const Bubble& bj,
                              const FracParams& p, QuadTol tol, Budget& budget);

// Checked subcritical variant: requires alpha + beta = 2n/(n-2g) and either
// alpha > n/(n-2g) > beta > 0 (unbalanced) or alpha = beta (balanced);
// anything else (e.g. beta = 0) throws std::invalid_argument.
QuadResult higher_interaction_oracle(const Bubble& bi, const Bubble& bj,
                                     double alpha, double beta,
                                     const FracParams& p, QuadTol tol,
                                     Budget& budget);

// ---------------------------------------------------------------------------
// Leading-term verification
// ---------------------------------------------------------------------------

// One comparison of an oracle value (direct quadrature for `value`, centered
// differences of the oracle otherwise) against the leading asymptotic term.
struct InteractionReport {
    double lambda_i = 0.0, lambda_j = 0.0, sep = 0.0;
    double eps = 0.0, q = 0.0;
    double oracle = 0.0;        // quadrature or differenced value
    double oracle_error = 0.0;  // quadrature estimate plus differencing residual
    double asymptotic = 0.0;    // leading term
    double error_scale = 0.0;   // predicted gap magnitude (constant unknown)
    double gap = 0.0;           // |oracle - asymptotic|
    double gap_ratio = 0.0;     // gap / error_scale
    bool fd_ok = true;          // oracle noise small against the measured gap
};

InteractionReport verify_interaction(const Bubble& bi, const Bubble& bj,
                                     const FracParams& p, InteractionOrder order,
                                     double c3, QuadTol tol, Budget& budget);

// ---------------------------------------------------------------------------
// Regime sweeps
// ---------------------------------------------------------------------------

// The two families that reach eps -> 0: concentrating one bubble at a fixed
// (or zero) separation, and separating two bubbles of equal scale.
enum class SweepRegime { lambda_ratio, separation };

struct SweepFit {
    std::vector<InteractionReport> points;
    double observed_exponent = 0.0;   // LS slope of log gap vs log eps
    double predicted_exponent = 0.0;  // LS slope of log error_scale vs log eps
    double max_gap_ratio = 0.0;
    bool fd_ok = true;                // all points individually trustworthy
};

// Runs verify_interaction over the built-in sweep of the given regime
// (each point on its own evaluation budget, points in parallel).
SweepFit interaction_sweep(InteractionOrder order, SweepRegime regime,
                           const FracParams& p, double c3,
                           QuadTol tol = QuadTol{1e-12, 1e-10});

// CSV export: lambda_i,lambda_j,sep,eps,oracle,asymptotic,gap,gap_ratio
void write_interaction_csv(const std::vector<InteractionReport>& points,
                           std::ostream& os);

// ---------------------------------------------------------------------------
// Self-contained identity checks
// ---------------------------------------------------------------------------

struct InteractionIdentityReport {
    // int (1 + r^2 - (n+2-2g) x_1^2) * (1+r^2)^{-(n+4-2g)/2} dx; exactly zero.
    double vanishing_moment = 0.0;
    // Two quadrature routes to the scale-derivative interaction coefficient:
    // (n-2g)/2 times the critical kernel mass, and the (n+2g)/2-weighted
    // integral of (r^2-1)/(r^2+1) against the same kernel. Equal by the
    // beta-function recursion for int (1+r^2)^{-s}.
    double coeff_from_mass = 0.0;
    double coeff_from_moment = 0.0;
    double coeff_rel_gap = 0.0;
    // Coupling dichotomy: for u = li/lj + lj/li and v = li*lj*|ai-aj|^2,
    // max(u, v) >= (u + v)/2, so S is always comparable to its larger half.
    int dichotomy_trials = 0;
    int dichotomy_failures = 0;
    bool converged = true;
};

InteractionIdentityReport interaction_identity_checks(const FracParams& p, QuadTol tol,
                                                      Budget& budget, int trials = 1000,
                                                      unsigned seed = 0x5eedu);

}  // namespace fracbubble
