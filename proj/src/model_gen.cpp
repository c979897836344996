#include "lvggm/model_gen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "lvggm/matrix_io.hpp"
#include "lvggm/rng.hpp"

namespace lvggm {

namespace {

using nlohmann::json;

std::vector<std::pair<int, int>> build_edges(const ModelSpec& spec, SplitMix64& rng) {
  std::vector<std::pair<int, int>> edges;
  const int p = spec.p;
  switch (spec.graph) {
    case GraphKind::Chain:
      for (int i = 0; i + 1 < p; ++i) edges.emplace_back(i, i + 1);
      break;
    case GraphKind::Grid: {
      const int side = static_cast<int>(std::lround(std::sqrt(double(p))));
      if (side * side != p)
        throw std::invalid_argument("grid graph requires a square p");
      auto at = [side](int r, int c) { return r * side + c; };
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          if (c + 1 < side) edges.emplace_back(at(r, c), at(r, c + 1));
          if (r + 1 < side) edges.emplace_back(at(r, c), at(r + 1, c));
        }
      break;
    }
    case GraphKind::ErdosRenyi: {
      const int d = spec.max_degree;
      std::vector<std::pair<int, int>> pairs;
      pairs.reserve(p * (p - 1) / 2);
      for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
      // Fisher-Yates, then accept with probability d/(p-1) under a hard
      // per-node degree cap d, so the target max degree is certain
      for (std::size_t i = pairs.size(); i > 1; --i)
        std::swap(pairs[i - 1], pairs[rng.next_index(i)]);
      const double accept = std::min(1.0, double(d) / double(p - 1));
      std::vector<int> degree(p, 0);
      for (const auto& [i, j] : pairs) {
        if (degree[i] >= d || degree[j] >= d) continue;
        if (rng.next_uniform() >= accept) continue;
        edges.emplace_back(i, j);
        ++degree[i];
        ++degree[j];
      }
      break;
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

int effective_rank_abs(const SymMatrix& a, double tol) {
  const EigDecomp e = eig_sym(a);
  int r = 0;
  for (int i = 0; i < a.dim(); ++i)
    if (e.eigenvalues[i] > tol) ++r;
  return r;
}

// observed diagonal = row l1 off-diagonal sum + boost, i.e. certifiable
// strict diagonal dominance of the S_star block
void set_dominant_observed_diagonal(Matrix& k, int p, double boost) {
  for (int i = 0; i < p; ++i) {
    double row = 0.0;
    for (int j = 0; j < p; ++j)
      if (j != i) row += std::abs(k(i, j));
    k(i, i) = row + boost;
  }
}

// Latent diagonal from the Schur condition: with Q = Z' S*^{-1} Z the full
// matrix is PD iff K_HH - Q is PD, so K_HH = (1+margin) diag(Q) + boost*I
// certifies PD once margin covers Q's off-diagonal mass.  Keeping the
// margin relative pins the latent eigenvalues of L_star near 1/(1+margin)
// independent of the coupling magnitude, so the low-rank part stays well
// separated from sampling noise without inflating the observed diagonal.
constexpr double kLatentSchurMargin = 0.25;

void set_latent_diagonal(Matrix& k, int p, int h, double margin, double boost) {
  const Matrix z = k.topRightCorner(p, h);
  const Matrix q =
      z.transpose() * k.topLeftCorner(p, p).llt().solve(z);
  for (int j = 0; j < h; ++j)
    k(p + j, p + j) = (1.0 + margin) * q(j, j) + boost;
}

}  // namespace

const char* graph_kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::Chain: return "chain";
    case GraphKind::Grid: return "grid";
    case GraphKind::ErdosRenyi: return "erdos_renyi";
  }
  return "unknown";
}

GraphKind graph_kind_from_name(const std::string& name) {
  if (name == "chain") return GraphKind::Chain;
  if (name == "grid") return GraphKind::Grid;
  if (name == "erdos_renyi") return GraphKind::ErdosRenyi;
  throw std::invalid_argument("unknown graph kind: " + name);
}

void ModelSpec::validate() const {
  if (p < 2) throw std::invalid_argument("ModelSpec: p must be >= 2");
  if (h < 0) throw std::invalid_argument("ModelSpec: h must be >= 0");
  if (!(s_min > 0.0) || !(s_min <= s_max) || !std::isfinite(s_max))
    throw std::invalid_argument("ModelSpec: need 0 < s_min <= s_max");
  if (graph == GraphKind::ErdosRenyi && max_degree < 1)
    throw std::invalid_argument("ModelSpec: max_degree must be >= 1");
  if (!std::isfinite(latent_coupling) || latent_coupling < 0.0)
    throw std::invalid_argument("ModelSpec: latent_coupling must be >= 0");
  if (!(diagonal_boost > 0.0))
    throw std::invalid_argument("ModelSpec: diagonal_boost must be > 0");
}

GroundTruth generate_ground_truth(const ModelSpec& spec) {
  spec.validate();
  const int p = spec.p, h = spec.h;
  SplitMix64 rng(derive_seed(spec.seed, {0x6D0DE1ULL}));

  const auto edges = build_edges(spec, rng);
  Matrix observed_offdiag = Matrix::Zero(p, p);
  for (const auto& [i, j] : edges) {
    const double mag = spec.s_min + rng.next_uniform() * (spec.s_max - spec.s_min);
    const double w = (rng.next_u64() & 1) ? mag : -mag;
    observed_offdiag(i, j) = w;
    observed_offdiag(j, i) = w;
  }

  const int coupled = (h > 0) ? (p * 4 + 4) / 5 : 0;  // ceil(0.8 p)
  const int rank_attempts = 32;
  for (int attempt = 0; attempt < rank_attempts; ++attempt) {
    Matrix k(p + h, p + h);
    k.setZero();
    k.topLeftCorner(p, p) = observed_offdiag;
    // each latent variable couples to a random 80% of the observed nodes
    // with equal-magnitude random-sign entries, spreading its effect so
    // L_star comes out dense rather than spiky
    for (int j = 0; j < h; ++j) {
      std::vector<int> idx(p);
      for (int i = 0; i < p; ++i) idx[i] = i;
      for (int i = 0; i < coupled; ++i)
        std::swap(idx[i], idx[i + rng.next_index(p - i)]);
      for (int i = 0; i < coupled; ++i) {
        const double w =
            (rng.next_u64() & 1) ? spec.latent_coupling : -spec.latent_coupling;
        k(idx[i], p + j) = w;
        k(p + j, idx[i]) = w;
      }
    }

    set_dominant_observed_diagonal(k, p, spec.diagonal_boost);
    double margin = kLatentSchurMargin;
    if (h > 0) set_latent_diagonal(k, p, h, margin, spec.diagonal_boost);
    SymMatrix k_full = SymMatrix::from_dense(k);
    for (int escalation = 0; escalation < 8 && h > 0 && !is_pd(k_full);
         ++escalation) {
      margin *= 2.0;
      set_latent_diagonal(k, p, h, margin, spec.diagonal_boost);
      k_full = SymMatrix::from_dense(k);
    }
    if (!is_pd(k_full))
      throw std::runtime_error(
          "generate_ground_truth: K_full not PD after margin escalation");

    std::vector<int> observed(p);
    for (int i = 0; i < p; ++i) observed[i] = i;
    SchurSplit split = schur_marginal(k_full, observed);

    const bool want_rank = h > 0 && spec.latent_coupling > 0.0;
    if (want_rank && effective_rank_abs(split.l_star, 1e-10) != h)
      continue;  // coupling matrix came out rank-deficient; redraw it

    GroundTruth truth;
    truth.k_full = std::move(k_full);
    truth.s_star = std::move(split.s_star);
    truth.l_star = std::move(split.l_star);
    truth.k_marg = std::move(split.k_marg);
    truth.sigma = pd_inverse(truth.k_marg);
    truth.edges = edges;
    truth.h = h;
    truth.spec = spec;
    return truth;
  }
  throw std::runtime_error(
      "generate_ground_truth: could not reach rank(L*) = h after redraws");
}

SampleSet sample_gaussian(const SymMatrix& sigma, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_gaussian: n must be >= 1");
  const Matrix chol = cholesky_lower(sigma);  // throws when sigma is not PD
  const int p = sigma.dim();
  SplitMix64 rng(seed);
  SampleSet out;
  out.n = n;
  out.seed = seed;
  out.data.resize(n, p);
  Vector z(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) z(j) = rng.next_gaussian();
    out.data.row(i) = (chol * z).transpose();
  }
  out.sigma_hat = empirical_covariance(out.data, false);
  return out;
}

SymMatrix empirical_covariance(const Matrix& data, bool center) {
  const auto n = data.rows();
  if (n < 1) throw std::invalid_argument("empirical_covariance: need n >= 1");
  if (center && n < 2)
    throw std::invalid_argument("empirical_covariance: centering needs n >= 2");
  if (!center)
    return SymMatrix::from_dense(data.transpose() * data / double(n));
  const Matrix centered = data.rowwise() - data.colwise().mean();
  return SymMatrix::from_dense(centered.transpose() * centered / double(n));
}

Perturbation perturb_sparse_lowrank(const SymMatrix& k, double delta,
                                    int k_sparsity, std::uint64_t seed) {
  const int p = k.dim();
  if (k_sparsity < 1 || k_sparsity > p)
    throw std::invalid_argument("perturb_sparse_lowrank: need 1 <= k <= p");
  if (!std::isfinite(delta))
    throw std::invalid_argument("perturb_sparse_lowrank: delta must be finite");
  if (!is_pd(k, 0.0))
    throw std::invalid_argument("perturb_sparse_lowrank: K must be PD");

  SplitMix64 rng(derive_seed(seed, {0x9E27ULL}));
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  for (int i = 0; i < k_sparsity; ++i)
    std::swap(idx[i], idx[i + rng.next_index(p - i)]);

  Vector z = Vector::Zero(p);
  for (int i = 0; i < k_sparsity; ++i) {
    double g = rng.next_gaussian();
    while (g == 0.0) g = rng.next_gaussian();
    z(idx[i]) = g;
  }
  z /= z.norm();

  Perturbation out;
  out.z = z;
  out.e = SymMatrix::from_dense(z * z.transpose());
  out.k_tilde = k + out.e * delta;
  if (delta < 0.0 && !is_pd(out.k_tilde, 0.0)) {
    const double lo = eig_sym(out.k_tilde).eigenvalues.minCoeff();
    throw std::runtime_error(
        "perturb_sparse_lowrank: K + delta*E loses positive definiteness "
        "(min eigenvalue " +
        std::to_string(lo) + ")");
  }
  return out;
}

void export_ground_truth(const GroundTruth& truth, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_matrix_text((fs::path(dir) / "k_full.txt").string(), truth.k_full);
  write_matrix_text((fs::path(dir) / "s_star.txt").string(), truth.s_star);
  write_matrix_text((fs::path(dir) / "l_star.txt").string(), truth.l_star);
  write_matrix_text((fs::path(dir) / "k_marg.txt").string(), truth.k_marg);
  write_matrix_text((fs::path(dir) / "sigma.txt").string(), truth.sigma);

  json manifest;
  manifest["p"] = truth.spec.p;
  manifest["h"] = truth.spec.h;
  manifest["graph"] = graph_kind_name(truth.spec.graph);
  manifest["max_degree"] = truth.spec.max_degree;
  manifest["s_min"] = truth.spec.s_min;
  manifest["s_max"] = truth.spec.s_max;
  manifest["latent_coupling"] = truth.spec.latent_coupling;
  manifest["diagonal_boost"] = truth.spec.diagonal_boost;
  manifest["seed"] = truth.spec.seed;
  json edge_list = json::array();
  for (const auto& [i, j] : truth.edges) edge_list.push_back({i, j});
  manifest["edges"] = std::move(edge_list);

  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw std::runtime_error("export_ground_truth: cannot write " + dir);
  os << manifest.dump(2) << "\n";
}

GroundTruth import_ground_truth(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is)
    throw std::runtime_error("import_ground_truth: missing manifest in " + dir);
  json manifest = json::parse(is);

  GroundTruth truth;
  truth.spec.p = manifest.at("p").get<int>();
  truth.spec.h = manifest.at("h").get<int>();
  truth.spec.graph = graph_kind_from_name(manifest.at("graph").get<std::string>());
  truth.spec.max_degree = manifest.at("max_degree").get<int>();
  truth.spec.s_min = manifest.at("s_min").get<double>();
  truth.spec.s_max = manifest.at("s_max").get<double>();
  truth.spec.latent_coupling = manifest.at("latent_coupling").get<double>();
  truth.spec.diagonal_boost = manifest.at("diagonal_boost").get<double>();
  truth.spec.seed = manifest.at("seed").get<std::uint64_t>();
  truth.h = truth.spec.h;
  for (const auto& e : manifest.at("edges"))
    truth.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());

  truth.k_full = read_matrix_text((fs::path(dir) / "k_full.txt").string());
  truth.s_star = read_matrix_text((fs::path(dir) / "s_star.txt").string());
  truth.l_star = read_matrix_text((fs::path(dir) / "l_star.txt").string());
  truth.k_marg = read_matrix_text((fs::path(dir) / "k_marg.txt").string());
  truth.sigma = read_matrix_text((fs::path(dir) / "sigma.txt").string());
  if (truth.k_full.dim() != truth.spec.p + truth.spec.h ||
      truth.s_star.dim() != truth.spec.p)
    throw std::runtime_error("import_ground_truth: inconsistent dimensions");
  return truth;
}

}  // namespace lvggm
