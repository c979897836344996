#pragma once

#include "lvggm/sym_matrix.hpp"

#include <utility>
#include <vector>

namespace lvggm {

/// Regularization pair of the latent-variable program: lambda_n is the
/// overall level, gamma trades the elementwise l1 penalty on S against the
/// trace penalty on L.
struct RegParams {
  double lambda_n = 0.1;
  double gamma = 1.0;

  void validate() const;
};

struct SolverConfig {
  double rho = 1.0;            // splitting penalty
  int max_iter = 5000;
  double tol_primal = 1e-7;    // scaled by sqrt(p) inside the solver
  double tol_dual = 1e-7;
  bool penalize_diagonal = true;
  bool adaptive_rho = false;   // ratio test: factor 10, scale by 2

  void validate() const;
};

enum class SolveStatus { Converged, MaxIterReached };

/// Solver output pair plus the reconstructed precision estimate.
/// r_hat is stored as the floating-point difference s_hat - l_hat, so the
/// identity r_hat = s_hat - l_hat holds bit-for-bit.
struct Estimate {
  SymMatrix s_hat;
  SymMatrix l_hat;
  SymMatrix r_hat;
};

struct SolverReport {
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::MaxIterReached;
  double rho_final = 0.0;
  std::vector<double> primal_history;  // ||R - S + L||_F per iteration
};

/// Sparse-plus-low-rank precision estimation: minimize over (S, L)
///   -logdet(S - L) + tr(sigma_hat (S - L)) + lambda_n (gamma ||S||_1 + tr L)
/// subject to S - L > 0, L >= 0, by operator splitting with an auxiliary
/// block R = S - L (R-step: prox_neglogdet; S-step: soft_threshold; L-step:
/// prox_trace_psd; scaled dual update). Converged status implies
/// kkt_residual <= max(tol_primal, tol_dual); hitting max_iter is reported
/// in the status, never thrown. Throws on non-finite input or bad params.
std::pair<Estimate, SolverReport> solve_lvglasso(const SymMatrix& sigma_hat,
                                                 const RegParams& reg,
                                                 const SolverConfig& cfg = {});

/// Maximum first-order optimality violation of an estimate for the program
/// above. With G = sigma_hat - inv(r_hat), the conditions scored are:
///   (i)  S-stationarity: G_ij = -lambda*gamma*sign(s_ij) on entries with
///        |s_ij| > zero_tol, |G_ij| <= lambda*gamma on the rest (G_ij = 0
///        on an unpenalized diagonal);
///   (ii) L-stationarity: the cone multiplier H = lambda*I - G must be PSD,
///        with complementary slackness ||H l_hat||_F;
///   (iii) feasibility: l_hat >= 0.
/// Zero at exact optima. Throws if r_hat is singular/not PD.
double kkt_residual(const SymMatrix& sigma_hat, const Estimate& est,
                    const RegParams& reg, bool penalize_diagonal = true,
                    double zero_tol = 1e-6);

/// Identity-operator noisy matrix decomposition: minimize over (S, L >= 0)
///   (1/2)||Y - (S - L)||_F^2 + lambda_s ||S||_1 + lambda_l tr(L)
/// by alternating exact prox steps on the two blocks. Converged status
/// means both per-block prox fixed-point equations hold within tolerance
/// (the report's kkt_residual carries the max fixed-point violation).
std::pair<Estimate, SolverReport> solve_noisy_decomposition(const SymMatrix& y,
                                                            double lambda_s,
                                                            double lambda_l,
                                                            const SolverConfig& cfg = {});

/// Objective of the latent-variable program at (S, L); used by the solver
/// report, the holdout selector, and direct-comparison tests. Returns
/// +infinity when s - l is not positive definite.
double lvglasso_objective(const SymMatrix& sigma_hat, const SymMatrix& s,
                          const SymMatrix& l, const RegParams& reg,
                          bool penalize_diagonal = true);

/// Gaussian log-likelihood of a precision matrix against a covariance:
/// logdet(precision) - tr(sigma * precision). Throws if precision is not PD.
double gaussian_loglik(const SymMatrix& precision, const SymMatrix& sigma);

namespace detail {

/// Shared splitting core: solves
///   -logdet R + tr(sigma_hat R) + l1_level ||S||_1 (+ trace_level tr L over
///   L >= 0 when with_lowrank) subject to R = S - L.
/// The graphical lasso is this with the L block disabled.
std::pair<Estimate, SolverReport> admm_splitting(const SymMatrix& sigma_hat,
                                                 double l1_level,
                                                 double trace_level,
                                                 bool with_lowrank,
                                                 const SolverConfig& cfg);

/// KKT core shared by the latent-variable program and the graphical lasso.
double kkt_core(const SymMatrix& sigma_hat, const Estimate& est,
                double l1_level, double trace_level, bool with_lowrank,
                bool penalize_diagonal, double zero_tol);

}  // namespace detail

}  // namespace lvggm
