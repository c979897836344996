#pragma once

#include "lvggm/model_gen.hpp"
#include "lvggm/solver.hpp"
#include "lvggm/sym_matrix.hpp"

#include <utility>
#include <vector>

namespace lvggm {

/// Flat recovery scorecard; one instance per (estimate, truth) pair. The
/// field set is stable API: it serializes 1:1 into result rows.
struct RecoveryReport {
  bool exact_signed_support = false;
  double support_precision = 1.0;
  double support_recall = 1.0;
  int sign_errors = 0;
  bool rank_recovered = false;
  int effective_rank = 0;
  double op_norm_error = 0.0;
  double frob_error_S = 0.0;
  double frob_error_L = 0.0;
};

/// Off-diagonal signed-support comparison; entries with |value| <= tol_zero
/// count as zero. Fills the support fields of the report (precision, recall
/// use the empty-set = 1 convention; a sign flip on a true edge counts as
/// detected for recall but breaks exactness).
RecoveryReport signed_support_metrics(const SymMatrix& s_hat,
                                      const SymMatrix& s_star,
                                      double tol_zero = 1e-6);

/// Effective rank = number of eigenvalues above rel_tol * max eigenvalue
/// (zero when the top eigenvalue is <= 0); recovered iff it equals h.
/// rel_tol must lie in (0, 1); the 1e-3 default is the eigenvalue noise
/// floor observed for runs at solver tolerance 1e-7.
std::pair<bool, int> rank_recovered(const SymMatrix& l_hat, int h,
                                    double rel_tol = 1e-3);

/// Error norms of an estimate against the ground truth: operator norm of
/// (S_hat - L_hat) - K_marg plus per-block Frobenius errors.
RecoveryReport estimation_errors(const Estimate& est, const GroundTruth& truth);

/// Convenience combination of the three scorers above.
RecoveryReport score_recovery(const Estimate& est, const GroundTruth& truth,
                              double tol_zero = 1e-6, double rank_rel_tol = 1e-3);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (log x, log y). Requires >= 2 points with
/// positive coordinates and at least two distinct x. A constant y (zero
/// total variation) fits perfectly: r_squared = 1 by convention.
LineFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace lvggm
