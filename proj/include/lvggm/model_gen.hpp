#pragma once

#include "lvggm/sym_matrix.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lvggm {

enum class GraphKind { Chain, Grid, ErdosRenyi };

/// Recipe for a synthetic latent-variable Gaussian model. The full precision
/// matrix over p observed + h hidden coordinates is assembled from a sparse
/// observed graph, a dense-ish latent coupling block, and a diagonally
/// dominant diagonal; the observed marginal then splits exactly into
/// sparse minus low-rank.
struct ModelSpec {
  int p = 30;
  int h = 1;
  GraphKind graph = GraphKind::ErdosRenyi;
  int max_degree = 2;        // Erdos-Renyi target max degree
  double s_min = 0.3;        // edge magnitudes drawn from [s_min, s_max],
  double s_max = 0.4;        // signs random
  double latent_coupling = 1.0;  // magnitude of observed-hidden entries
  double diagonal_boost = 0.3;   // dominance margin added to each diagonal
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruth {
  SymMatrix k_full;  // (p + h) precision of the joint model
  SymMatrix s_star;  // observed block K_OO
  SymMatrix l_star;  // K_OH K_HH^-1 K_HO
  SymMatrix k_marg;  // s_star - l_star, precision of the observed marginal
  SymMatrix sigma;   // k_marg^-1, covariance seen by the estimators
  std::vector<std::pair<int, int>> edges;  // observed graph, pairs i < j
  int h = 0;
  ModelSpec spec;
};

struct SampleSet {
  int n = 0;
  Matrix data;  // n x p, rows i.i.d. N(0, Sigma)
  SymMatrix sigma_hat;
  std::uint64_t seed = 0;
};

struct Perturbation {
  SymMatrix k_tilde;  // K + delta * z z^T
  Vector z;           // unit norm, exactly k nonzero entries
  SymMatrix e;        // z z^T
};

/// Build a ground-truth model from the spec; deterministic in spec.seed.
/// Throws if the construction cannot reach a PD K_full after escalating the
/// diagonal boost (does not happen for valid specs: diagonal dominance is
/// certifiable), or if a grid graph is requested with non-square p.
GroundTruth generate_ground_truth(const ModelSpec& spec);

/// n i.i.d. rows of N(0, Sigma) via the Cholesky factor applied to seeded
/// standard normals; identical seed gives identical bytes. The attached
/// sigma_hat is the uncentered empirical covariance.
SampleSet sample_gaussian(const SymMatrix& sigma, int n, std::uint64_t seed);

/// (1/n) X^T X; with center = true the columns are de-meaned first (n >= 2
/// required, 1/n convention kept). Mean is known zero in this codebase, so
/// center defaults to false.
SymMatrix empirical_covariance(const Matrix& data, bool center = false);

/// Rank-one sparse perturbation K + delta * z z^T with z unit-norm and
/// exactly k nonzero coordinates. delta < 0 is checked to keep the result
/// PD; the violating eigenvalue is reported otherwise.
Perturbation perturb_sparse_lowrank(const SymMatrix& k, double delta,
                                    int k_sparsity, std::uint64_t seed);

/// Directory export/import: matrix text files (k_full, s_star, l_star,
/// k_marg, sigma) plus manifest.json carrying the spec and edge list.
/// Round-trips bit-exactly.
void export_ground_truth(const GroundTruth& truth, const std::string& dir);
GroundTruth import_ground_truth(const std::string& dir);

const char* graph_kind_name(GraphKind kind);
GraphKind graph_kind_from_name(const std::string& name);

}  // namespace lvggm
