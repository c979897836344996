#include "lvggm/prox.hpp"

#include <cmath>
#include <stdexcept>

namespace lvggm {

namespace {

double soft(double a, double tau) {
  if (a > tau) return a - tau;
  if (a < -tau) return a + tau;
  return 0.0;
}

// Spectral shift r_i = (b_i + sqrt(b_i^2 + 4/rho)) / 2 applied to B.
SymMatrix neglogdet_from_b(const SymMatrix& b, double rho) {
  const EigDecomp d = eig_sym(b);
  Vector r(b.dim());
  for (int i = 0; i < b.dim(); ++i) {
    const double bi = d.eigenvalues(i);
    r(i) = 0.5 * (bi + std::sqrt(bi * bi + 4.0 / rho));
  }
  Matrix out = d.eigenvectors * r.asDiagonal() * d.eigenvectors.transpose();
  // from_dense symmetrizes, killing eigensolver round-off drift.
  return SymMatrix::from_dense(out);
}

}  // namespace

SymMatrix soft_threshold(const SymMatrix& a, double tau, bool penalize_diagonal) {
  if (tau < 0) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  const int p = a.dim();
  Matrix out(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      out(i, j) = (i == j && !penalize_diagonal) ? a(i, j) : soft(a(i, j), tau);
  return SymMatrix::wrap(std::move(out));
}

SymMatrix prox_neglogdet(const SymMatrix& a, double rho, const SymMatrix& sigma_hat) {
  if (rho <= 0) throw std::invalid_argument("prox_neglogdet: rho must be > 0");
  if (sigma_hat.dim() != a.dim())
    throw std::invalid_argument("prox_neglogdet: dimension mismatch");
  return neglogdet_from_b(a - sigma_hat * (1.0 / rho), rho);
}

SymMatrix prox_neglogdet(const SymMatrix& a, double rho) {
  if (rho <= 0) throw std::invalid_argument("prox_neglogdet: rho must be > 0");
  return neglogdet_from_b(a, rho);
}

SymMatrix prox_trace_psd(const SymMatrix& a, double tau) {
  if (tau < 0) throw std::invalid_argument("prox_trace_psd: tau must be >= 0");
  const EigDecomp d = eig_sym(a);
  Vector r(a.dim());
  for (int i = 0; i < a.dim(); ++i) r(i) = std::max(d.eigenvalues(i) - tau, 0.0);
  Matrix out = d.eigenvectors * r.asDiagonal() * d.eigenvectors.transpose();
  return SymMatrix::from_dense(out);
}

ProxResult soft_threshold_certified(const SymMatrix& a, double tau, bool penalize_diagonal) {
  ProxResult res{soft_threshold(a, tau, penalize_diagonal), true};
  const int p = a.dim();
  for (int i = 0; i < p && res.objective_decrease_certified; ++i)
    for (int j = 0; j < p; ++j) {
      const double v = res.value(i, j);
      const double want = (i == j && !penalize_diagonal) ? a(i, j) : soft(a(i, j), tau);
      if (std::abs(v - want) > 1e-10) {
        res.objective_decrease_certified = false;
        break;
      }
    }
  return res;
}

ProxResult prox_neglogdet_certified(const SymMatrix& a, double rho, const SymMatrix* sigma_hat) {
  SymMatrix b = sigma_hat ? a - *sigma_hat * (1.0 / rho) : a;
  ProxResult res{neglogdet_from_b(b, rho), true};
  // Per-eigenvalue stationarity r - b = 1/(rho r), checked in the basis of B.
  const EigDecomp d = eig_sym(b);
  const Matrix rv = d.eigenvectors.transpose() * res.value.dense() * d.eigenvectors;
  for (int i = 0; i < b.dim(); ++i) {
    const double r = rv(i, i);
    if (r <= 0 || std::abs(r - d.eigenvalues(i) - 1.0 / (rho * r)) > 1e-10) {
      res.objective_decrease_certified = false;
      break;
    }
  }
  return res;
}

ProxResult prox_trace_psd_certified(const SymMatrix& a, double tau) {
  ProxResult res{prox_trace_psd(a, tau), true};
  const EigDecomp da = eig_sym(a);
  const EigDecomp dr = eig_sym(res.value);
  for (int i = 0; i < a.dim(); ++i) {
    const double want = std::max(da.eigenvalues(i) - tau, 0.0);
    if (std::abs(dr.eigenvalues(i) - want) > 1e-10) {
      res.objective_decrease_certified = false;
      break;
    }
  }
  return res;
}

}  // namespace lvggm
