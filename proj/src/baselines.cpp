#include "lvggm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lvggm {

namespace {

double soft(double a, double tau) {
  if (a > tau) return a - tau;
  if (a < -tau) return a + tau;
  return 0.0;
}

}  // namespace

void LassoProblem::validate() const {
  if (design.rows() < 1 || design.cols() < 1)
    throw std::invalid_argument("LassoProblem: empty design");
  if (response.size() != design.rows())
    throw std::invalid_argument("LassoProblem: response length mismatch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("LassoProblem: lambda must be >= 0");
  if (!design.allFinite() || !response.allFinite())
    throw std::invalid_argument("LassoProblem: non-finite values");
}

LassoResult lasso_cd(const LassoProblem& prob, double tol, int max_iter) {
  prob.validate();
  if (!(tol > 0.0) || max_iter < 1)
    throw std::invalid_argument("lasso_cd: need tol > 0 and max_iter >= 1");

  const auto& x = prob.design;
  const double n = double(x.rows());
  const int q = static_cast<int>(x.cols());
  const double lambda = prob.lambda;

  Vector col_sq(q);  // (1/n) ||X_j||^2, the coordinate curvatures
  for (int j = 0; j < q; ++j) col_sq(j) = x.col(j).squaredNorm() / n;

  LassoResult res;
  res.beta = Vector::Zero(q);
  Vector r = prob.response;  // residual y - X beta, maintained incrementally

  for (int sweep = 1; sweep <= max_iter; ++sweep) {
    res.sweeps = sweep;
    for (int j = 0; j < q; ++j) {
      if (col_sq(j) <= 0.0) continue;  // zero column stays at zero
      const double grad = x.col(j).dot(r) / n;
      const double next = soft(grad + col_sq(j) * res.beta(j), lambda) / col_sq(j);
      const double delta = next - res.beta(j);
      if (delta != 0.0) {
        r -= x.col(j) * delta;
        res.beta(j) = next;
      }
    }
    bool kkt_ok = true;
    for (int j = 0; j < q && kkt_ok; ++j) {
      const double grad = x.col(j).dot(r) / n;
      if (res.beta(j) == 0.0) {
        kkt_ok = std::abs(grad) <= lambda + tol;
      } else {
        kkt_ok = std::abs(grad - lambda * (res.beta(j) > 0 ? 1.0 : -1.0)) <= tol;
      }
    }
    if (kkt_ok) {
      res.status = LassoStatus::Converged;
      break;
    }
  }
  return res;
}

namespace {

NeighborhoodSelection neighborhood_core(const SampleSet& samples, double lambda,
                                        NeighborhoodRule rule) {
  const int p = static_cast<int>(samples.data.cols());
  const auto n = samples.data.rows();
  if (n < 2) throw std::invalid_argument("neighborhood_select: need n >= 2");
  if (p < 2) throw std::invalid_argument("neighborhood_select: need p >= 2");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("neighborhood_select: lambda must be >= 0");

  // beta_dir(j, k): coefficient of (standardized) X_k in the regression of
  // X_j on all others
  Matrix beta_dir = Matrix::Zero(p, p);
  Matrix design(n, p - 1);
  for (int j = 0; j < p; ++j) {
    std::vector<int> cols;
    cols.reserve(p - 1);
    for (int k = 0; k < p; ++k)
      if (k != j) cols.push_back(k);
    for (int c = 0; c < p - 1; ++c) {
      design.col(c) = samples.data.col(cols[c]);
      const double scale = std::sqrt(design.col(c).squaredNorm() / double(n));
      if (scale > 0.0) design.col(c) /= scale;
    }
    const LassoResult fit =
        lasso_cd({design, samples.data.col(j), lambda}, 1e-8, 10000);
    for (int c = 0; c < p - 1; ++c) beta_dir(j, cols[c]) = fit.beta(c);
  }

  NeighborhoodSelection out;
  out.edges.p = p;
  out.sign_pattern = SymMatrix(p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double bij = beta_dir(i, j), bji = beta_dir(j, i);
      const bool keep = rule == NeighborhoodRule::And ? (bij != 0.0 && bji != 0.0)
                                                      : (bij != 0.0 || bji != 0.0);
      if (!keep) continue;
      out.edges.edges.emplace_back(i, j);
      const double b = std::abs(bij) >= std::abs(bji) ? bij : bji;
      out.sign_pattern.set(i, j, b > 0.0 ? -1.0 : 1.0);
    }
  std::sort(out.edges.edges.begin(), out.edges.edges.end());
  return out;
}

}  // namespace

EdgeSet neighborhood_select(const SampleSet& samples, double lambda,
                            NeighborhoodRule rule) {
  return neighborhood_core(samples, lambda, rule).edges;
}

NeighborhoodSelection neighborhood_select_signed(const SampleSet& samples,
                                                 double lambda,
                                                 NeighborhoodRule rule) {
  return neighborhood_core(samples, lambda, rule);
}

std::pair<SymMatrix, SolverReport> glasso(const SymMatrix& sigma_hat,
                                          double lambda, bool penalize_diagonal,
                                          const SolverConfig& cfg) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("glasso: lambda must be positive");
  SolverConfig local = cfg;
  local.penalize_diagonal = penalize_diagonal;
  auto [est, report] =
      detail::admm_splitting(sigma_hat, lambda, 0.0, /*with_lowrank=*/false, local);
  return {std::move(est.r_hat), std::move(report)};
}

}  // namespace lvggm
