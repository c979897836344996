#pragma once

#include "lvggm/sym_matrix.hpp"

namespace lvggm {

/// Prox output plus a stationarity certificate, for callers that want the
/// closed form re-checked against its defining optimality condition.
struct ProxResult {
  SymMatrix value;
  bool objective_decrease_certified = false;
};

/// Elementwise soft threshold: prox of tau*||.||_1. Each selected entry maps
/// to sign(a) * max(|a| - tau, 0); with penalize_diagonal = false the
/// diagonal passes through unchanged.
SymMatrix soft_threshold(const SymMatrix& a, double tau, bool penalize_diagonal = true);

/// Prox of the negative Gaussian log-likelihood in the precision matrix:
/// argmin_R  -logdet R + tr(sigma_hat R) + (rho/2) ||R - a||_F^2.
/// With b_i the eigenvalues of B = a - sigma_hat/rho, the solution shifts
/// each eigenvalue to r_i = (b_i + sqrt(b_i^2 + 4/rho)) / 2, so the output
/// is positive definite for any input. Throws if rho <= 0.
SymMatrix prox_neglogdet(const SymMatrix& a, double rho, const SymMatrix& sigma_hat);

/// Same without the trace term: argmin_R -logdet R + (rho/2)||R - a||_F^2.
SymMatrix prox_neglogdet(const SymMatrix& a, double rho);

/// Prox of tau*trace(L) over the PSD cone:
/// argmin_{L >= 0} tau*tr(L) + (1/2)||L - a||_F^2, i.e. shift the spectrum
/// down by tau and clip at zero (exact projection, no smoothing).
SymMatrix prox_trace_psd(const SymMatrix& a, double tau);

// Certified variants: recompute the defining first-order condition at the
// returned point and report whether it holds to 1e-10. Used by tests and
// available as a paranoia switch for long experiment sweeps.
ProxResult soft_threshold_certified(const SymMatrix& a, double tau, bool penalize_diagonal = true);
ProxResult prox_neglogdet_certified(const SymMatrix& a, double rho, const SymMatrix* sigma_hat);
ProxResult prox_trace_psd_certified(const SymMatrix& a, double tau);

}  // namespace lvggm
