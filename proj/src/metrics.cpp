#include "lvggm/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace lvggm {

RecoveryReport signed_support_metrics(const SymMatrix& s_hat,
                                      const SymMatrix& s_star,
                                      double tol_zero) {
  if (s_hat.dim() != s_star.dim())
    throw std::invalid_argument("signed_support_metrics: dimension mismatch");
  if (tol_zero < 0.0)
    throw std::invalid_argument("signed_support_metrics: tol_zero must be >= 0");

  const int p = s_hat.dim();
  int true_pos = 0, false_pos = 0, false_neg = 0, sign_errors = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double hat = std::abs(s_hat(i, j)) <= tol_zero ? 0.0 : s_hat(i, j);
      const double star = std::abs(s_star(i, j)) <= tol_zero ? 0.0 : s_star(i, j);
      if (star != 0.0 && hat != 0.0) {
        ++true_pos;
        if ((star > 0.0) != (hat > 0.0)) ++sign_errors;
      } else if (star == 0.0 && hat != 0.0) {
        ++false_pos;
      } else if (star != 0.0 && hat == 0.0) {
        ++false_neg;
      }
    }

  RecoveryReport rep;
  rep.sign_errors = sign_errors;
  rep.support_precision =
      (true_pos + false_pos == 0) ? 1.0 : double(true_pos) / (true_pos + false_pos);
  rep.support_recall =
      (true_pos + false_neg == 0) ? 1.0 : double(true_pos) / (true_pos + false_neg);
  rep.exact_signed_support =
      false_pos == 0 && false_neg == 0 && sign_errors == 0;
  return rep;
}

std::pair<bool, int> rank_recovered(const SymMatrix& l_hat, int h, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0))
    throw std::invalid_argument("rank_recovered: rel_tol must lie in (0, 1)");
  const EigDecomp e = eig_sym(l_hat);
  const double top = e.eigenvalues[0];
  int rank = 0;
  if (top > 0.0) {
    const double cut = rel_tol * top;
    for (int i = 0; i < l_hat.dim(); ++i)
      if (e.eigenvalues[i] > cut) ++rank;
  }
  return {rank == h, rank};
}

RecoveryReport estimation_errors(const Estimate& est, const GroundTruth& truth) {
  if (est.s_hat.dim() != truth.s_star.dim())
    throw std::invalid_argument("estimation_errors: dimension mismatch");
  RecoveryReport rep;
  rep.op_norm_error = matrix_norms(est.r_hat - truth.k_marg).operator_norm;
  rep.frob_error_S = (est.s_hat - truth.s_star).frobenius();
  rep.frob_error_L = (est.l_hat - truth.l_star).frobenius();
  return rep;
}

RecoveryReport score_recovery(const Estimate& est, const GroundTruth& truth,
                              double tol_zero, double rank_rel_tol) {
  RecoveryReport rep = signed_support_metrics(est.s_hat, truth.s_star, tol_zero);
  const auto [ok, rank] = rank_recovered(est.l_hat, truth.h, rank_rel_tol);
  rep.rank_recovered = ok;
  rep.effective_rank = rank;
  const RecoveryReport err = estimation_errors(est, truth);
  rep.op_norm_error = err.op_norm_error;
  rep.frob_error_S = err.frob_error_S;
  rep.frob_error_L = err.frob_error_L;
  return rep;
}

LineFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw std::invalid_argument("fit_loglog_slope: coordinates must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = double(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    const double dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0)
    throw std::invalid_argument("fit_loglog_slope: x values must not all coincide");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 1e-30) {
    fit.r_squared = 1.0;  // constant y: the flat line is a perfect fit
  } else {
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
      const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
      ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

}  // namespace lvggm
