#pragma once

#include "lvggm/model_gen.hpp"
#include "lvggm/solver.hpp"
#include "lvggm/sym_matrix.hpp"

#include <utility>
#include <vector>

namespace lvggm {

/// Lasso in the (1/(2n))||y - X beta||^2 + lambda*||beta||_1 convention,
/// so the all-zero solution appears exactly at lambda >= ||X^T y / n||_inf.
struct LassoProblem {
  Matrix design;    // n x q
  Vector response;  // n
  double lambda = 0.0;

  void validate() const;
};

enum class LassoStatus { Converged, MaxIterReached };

struct LassoResult {
  Vector beta;
  LassoStatus status = LassoStatus::MaxIterReached;
  int sweeps = 0;
};

/// Cyclic coordinate descent with a maintained residual. Stops when the
/// KKT conditions hold within tol: |X_j^T r / n| <= lambda + tol on inactive
/// coordinates, = lambda*sign(beta_j) +- tol on active ones. Exhausting
/// max_iter sweeps is reported in the status; coefficients are still
/// returned.
LassoResult lasso_cd(const LassoProblem& prob, double tol = 1e-8,
                     int max_iter = 10000);

enum class NeighborhoodRule { And, Or };

struct EdgeSet {
  int p = 0;
  std::vector<std::pair<int, int>> edges;  // sorted, i < j, no self-loops
};

/// Node-wise Lasso graph selection: regress each coordinate on all others
/// (predictors standardized to unit empirical second moment so one lambda
/// fits every node), then combine directional neighborhoods with the AND
/// (default, conservative) or OR rule.
EdgeSet neighborhood_select(const SampleSet& samples, double lambda,
                            NeighborhoodRule rule = NeighborhoodRule::And);

/// Same selection plus a {-1, 0, +1} pseudo-sign matrix: the sign of a
/// precision entry is the negated regression coefficient sign, taken from
/// the direction with the larger |coefficient| when the two disagree.
struct NeighborhoodSelection {
  EdgeSet edges;
  SymMatrix sign_pattern;
};
NeighborhoodSelection neighborhood_select_signed(const SampleSet& samples,
                                                 double lambda,
                                                 NeighborhoodRule rule = NeighborhoodRule::And);

/// l1-regularized Gaussian MLE (graphical lasso): minimize over K > 0
///   -logdet K + tr(sigma_hat K) + lambda*||K||_1 (diagonal optional).
/// Shares the splitting core of solve_lvglasso with the low-rank block
/// disabled; the explicit penalize_diagonal argument overrides the one in
/// cfg. Returns the PD precision estimate.
std::pair<SymMatrix, SolverReport> glasso(const SymMatrix& sigma_hat,
                                          double lambda,
                                          bool penalize_diagonal = true,
                                          const SolverConfig& cfg = {});

}  // namespace lvggm
