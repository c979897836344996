#include "lvggm/sym_matrix.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace lvggm {

EigDecomp eig_sym(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.dense());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_sym: eigensolver did not converge within the iteration cap");
  const int p = a.dim();
  // Eigen returns ascending order; flip to descending.
  EigDecomp d;
  d.eigenvalues = es.eigenvalues().reverse();
  d.eigenvectors.resize(p, p);
  for (int j = 0; j < p; ++j) d.eigenvectors.col(j) = es.eigenvectors().col(p - 1 - j);
  return d;
}

MatrixNorms matrix_norms(const SymMatrix& a) {
  MatrixNorms n;
  n.frobenius = a.frobenius();
  n.elementwise_max_abs = a.max_abs();
  n.elementwise_l1 = a.dense().cwiseAbs().sum();
  const EigDecomp d = eig_sym(a);
  n.operator_norm = d.eigenvalues.cwiseAbs().maxCoeff();
  return n;
}

bool is_pd(const SymMatrix& a, double tol) {
  const EigDecomp d = eig_sym(a);
  return d.eigenvalues(a.dim() - 1) > tol;
}

SchurSplit schur_marginal(const SymMatrix& k_full, const std::vector<int>& observed) {
  const int full_dim = k_full.dim();
  const int p = static_cast<int>(observed.size());
  if (p < 1 || p > full_dim)
    throw std::invalid_argument("schur_marginal: observed set size out of range");
  std::vector<bool> seen(full_dim, false);
  for (int idx : observed) {
    if (idx < 0 || idx >= full_dim)
      throw std::invalid_argument("schur_marginal: observed index out of range");
    if (seen[idx]) throw std::invalid_argument("schur_marginal: duplicate observed index");
    seen[idx] = true;
  }
  if (!is_pd(k_full, 0.0))
    throw std::invalid_argument("schur_marginal: k_full is not positive definite");

  std::vector<int> hidden;
  for (int i = 0; i < full_dim; ++i)
    if (!seen[i]) hidden.push_back(i);
  const int h = static_cast<int>(hidden.size());

  Matrix k_oo(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) k_oo(i, j) = k_full(observed[i], observed[j]);

  SchurSplit out;
  out.s_star = SymMatrix::from_dense(k_oo);
  if (h == 0) {
    out.l_star = SymMatrix(p);
    out.k_marg = out.s_star;
    return out;
  }

  Matrix k_oh(p, h), k_hh(h, h);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < h; ++j) k_oh(i, j) = k_full(observed[i], hidden[j]);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) k_hh(i, j) = k_full(hidden[i], hidden[j]);

  Eigen::LLT<Matrix> llt(k_hh);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("schur_marginal: hidden block K_HH is singular");
  const Matrix l_star = k_oh * llt.solve(k_oh.transpose());

  out.l_star = SymMatrix::from_dense(l_star);
  out.k_marg = out.s_star - out.l_star;
  return out;
}

double spikiness(const SymMatrix& l) {
  const double f = l.frobenius();
  if (f == 0.0) throw std::invalid_argument("spikiness: undefined for the zero matrix");
  return static_cast<double>(l.dim()) * l.max_abs() / f;
}

SymMatrix pd_inverse(const SymMatrix& a) {
  Eigen::LLT<Matrix> llt(a.dense());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("pd_inverse: matrix is not positive definite");
  return SymMatrix::from_dense(llt.solve(Matrix::Identity(a.dim(), a.dim())));
}

double pd_logdet(const SymMatrix& a) {
  Eigen::LLT<Matrix> llt(a.dense());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("pd_logdet: matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Matrix cholesky_lower(const SymMatrix& a) {
  Eigen::LLT<Matrix> llt(a.dense());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cholesky_lower: matrix is not positive definite");
  return llt.matrixL();
}

}  // namespace lvggm
