#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace lvggm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default eigenvalue tolerance for positive-definiteness checks.
inline constexpr double kPdTol = 1e-10;

/// Dense symmetric p x p matrix, the numeric carrier used everywhere.
///
/// Symmetry is enforced at construction: any ingested dense matrix is
/// replaced by (A + A^T)/2, so downstream code may assume entries(i,j)
/// == entries(j,i) exactly. All entries must be finite.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Zero matrix of the given dimension (dim >= 1).
  explicit SymMatrix(int dim) {
    if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
    m_ = Matrix::Zero(dim, dim);
  }

  static SymMatrix identity(int dim) {
    SymMatrix s(dim);
    s.m_ = Matrix::Identity(dim, dim);
    return s;
  }

  /// Ingest a dense matrix: symmetrize (A + A^T)/2 and validate finiteness.
  static SymMatrix from_dense(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
      throw std::invalid_argument("SymMatrix: matrix must be square, dim >= 1");
    if (!a.allFinite())
      throw std::invalid_argument("SymMatrix: non-finite entries");
    SymMatrix s;
    s.m_ = 0.5 * (a + a.transpose());
    return s;
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  bool empty() const { return m_.rows() == 0; }

  double operator()(int i, int j) const { return m_(i, j); }

  /// Sets (i,j) and (j,i) together.
  void set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  const Matrix& dense() const { return m_; }

  double trace() const { return m_.trace(); }
  double frobenius() const { return m_.norm(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  SymMatrix operator+(const SymMatrix& o) const { return wrap(m_ + o.m_); }
  SymMatrix operator-(const SymMatrix& o) const { return wrap(m_ - o.m_); }
  SymMatrix operator-() const { return wrap(-m_); }
  SymMatrix operator*(double c) const { return wrap(c * m_); }
  SymMatrix& operator+=(const SymMatrix& o) {
    m_ += o.m_;
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    m_ -= o.m_;
    return *this;
  }

  friend SymMatrix operator*(double c, const SymMatrix& a) { return a * c; }

  /// Trusted constructor for matrices that are symmetric by construction
  /// (sums, spectral reconstructions). Skips the symmetrize pass.
  static SymMatrix wrap(Matrix m) {
    SymMatrix s;
    s.m_ = std::move(m);
    return s;
  }

 private:
  Matrix m_;
};

/// Spectral decomposition A = U diag(d) U^T with d sorted descending and
/// U orthonormal by columns.
struct EigDecomp {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Norms reported together because the estimators and diagnostics need all
/// four: operator <= frobenius <= elementwise_l1 always holds.
struct MatrixNorms {
  double frobenius = 0;
  double operator_norm = 0;  // largest |eigenvalue|
  double elementwise_max_abs = 0;
  double elementwise_l1 = 0;
};

/// Schur-complement split of a (p+h)-dimensional precision matrix onto the
/// observed block: s_star = K_OO, l_star = K_OH K_HH^{-1} K_HO,
/// k_marg = s_star - l_star (the marginal precision of the observed block).
struct SchurSplit {
  SymMatrix s_star;
  SymMatrix l_star;
  SymMatrix k_marg;
};

/// Symmetric eigendecomposition (tridiagonalization + implicit QR, iteration
/// cap 30*p). Throws std::runtime_error if the iteration fails to converge;
/// never returns garbage silently.
EigDecomp eig_sym(const SymMatrix& a);

MatrixNorms matrix_norms(const SymMatrix& a);

/// True iff the smallest eigenvalue exceeds tol.
bool is_pd(const SymMatrix& a, double tol = kPdTol);

/// Marginalize out the hidden coordinates of a PD full precision matrix.
/// `observed` lists the kept indices (distinct, in range). Throws if k_full
/// is not PD or the hidden block is singular.
SchurSplit schur_marginal(const SymMatrix& k_full, const std::vector<int>& observed);

/// Spikiness ratio alpha(L) = p * ||L||_inf / ||L||_F, in [1, p].
/// Small values mean the mass is spread out; p means a single spike.
/// Throws on the zero matrix (the ratio is undefined).
double spikiness(const SymMatrix& l);

/// Inverse of a PD symmetric matrix via Cholesky. Throws if not PD.
SymMatrix pd_inverse(const SymMatrix& a);

/// log det of a PD symmetric matrix via Cholesky. Throws if not PD.
double pd_logdet(const SymMatrix& a);

/// Lower Cholesky factor of a PD symmetric matrix. Throws if not PD.
Matrix cholesky_lower(const SymMatrix& a);

}  // namespace lvggm
