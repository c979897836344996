#pragma once

#include "lvggm/metrics.hpp"
#include "lvggm/model_gen.hpp"
#include "lvggm/solver.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lvggm {

enum class ExperimentKind { Scaling, Phase, MinSignal, Perturbation, BaselineCompare };

enum class RegRuleKind { Fixed, TheoryScaled, Holdout };

/// lambda_n selection policy. fixed passes (lambda, gamma) through;
/// theory_scaled sets lambda_n = c * sqrt(p / n); holdout fits every grid
/// candidate on a train split and keeps the one with the highest held-out
/// Gaussian log-likelihood (first wins on ties).
struct RegRule {
  RegRuleKind kind = RegRuleKind::TheoryScaled;
  double lambda = 0.1;             // Fixed
  double c = 1.0;                  // TheoryScaled
  double gamma = 1.0;              // shared by every rule
  std::vector<double> grid;        // Holdout lambda candidates
  double holdout_fraction = 0.25;  // validation share of the sample rows

  static RegRule fixed(double lambda, double gamma = 1.0);
  static RegRule theory_scaled(double c, double gamma = 1.0);
  static RegRule holdout(std::vector<double> grid, double fraction = 0.25,
                         double gamma = 1.0);
  void validate() const;
};

struct RegChoice {
  double lambda_n = 0.0;
  double gamma = 1.0;
};

/// Resolve the rule at a given problem size. Deterministic for fixed and
/// theory_scaled; the holdout rule needs the sample set and throws without
/// one.
RegChoice choose_lambda(const RegRule& rule, int p, int n,
                        const SampleSet* holdout_data = nullptr);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Scaling;
  ModelSpec model;                 // template; per-trial seeds are derived
  std::vector<int> n_grid;
  std::vector<int> p_grid;         // phase sweeps; empty keeps model.p
  std::vector<double> delta_grid;  // perturbation sweeps, must include 0
  std::vector<double> s_min_grid;  // minsignal sweeps
  int trials = 1;
  std::uint64_t base_seed = 1;
  RegRule reg;
  std::string output_path;         // empty: rows returned, nothing written
  std::vector<std::string> methods = {"lvglasso"};
  bool population_covariance = false;  // perturbation: exact Sigma = K~^-1
  int perturb_k = 3;                   // nonzeros of the perturbation vector
  bool record_timing = false;  // off: wall_ms = 0 so reruns are byte-stable
  int jobs = 1;

  void validate() const;
};

/// One (cell, trial, method) record; field order matches the CSV header.
struct ResultRow {
  std::string experiment;
  int p = 0;
  int h = 0;
  int n = 0;
  int d = 0;
  double s_min = 0.0;
  double delta = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;
  double lambda = 0.0;
  double gamma = 0.0;
  RecoveryReport report;
  int iterations = 0;
  long long wall_ms = 0;
};

/// Injection point for harness self-tests: a runner hands the prepared trial
/// to this hook and scores whatever comes back. The default (empty) solver
/// is the production path, solve_lvglasso on sigma_input.
struct TrialInput {
  const GroundTruth* truth = nullptr;
  const SampleSet* samples = nullptr;      // null in population mode
  const SymMatrix* sigma_input = nullptr;  // what the estimator sees
  int n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  RegChoice reg;
};
struct TrialOutput {
  Estimate est;
  int iterations = 0;
};
using TrialSolver = std::function<TrialOutput(const TrialInput&)>;

struct ScalingResult {
  std::vector<ResultRow> rows;
  std::vector<std::pair<double, double>> median_errors;  // (n, median op err)
  LineFit fit;                                           // log-log in n
};
/// Fixed p from the model template, one cell per n in n_grid.
ScalingResult run_scaling_experiment(const ExperimentConfig& cfg,
                                     TrialSolver solver = {});

struct PhaseCell {
  int n = 0;
  int p = 0;
  double s_min = 0.0;
  double success_fraction = 0.0;  // exact signed support AND rank
};
struct PhaseResult {
  std::vector<ResultRow> rows;
  std::vector<PhaseCell> cells;
};
/// kind = Phase sweeps n_grid x p_grid; kind = MinSignal sweeps
/// n_grid x s_min_grid (the magnitude band keeps its template width).
PhaseResult run_phase_experiment(const ExperimentConfig& cfg,
                                 TrialSolver solver = {});

struct PerturbationResult {
  std::vector<ResultRow> rows;
  std::vector<std::pair<double, double>> mean_errors_s;  // (delta, mean frob)
  LineFit small_delta_fit;  // linear in delta over delta <= 0.1
  int skipped = 0;          // perturbations that broke positive definiteness
};
/// Perturb the marginal precision by delta * z z^T (z unit, perturb_k
/// nonzeros), hand the estimator the perturbed input (population inverse or
/// samples from it), and score against the unperturbed truth.
PerturbationResult run_perturbation_experiment(const ExperimentConfig& cfg,
                                               TrialSolver solver = {});

struct MethodSummary {
  std::string method;
  double exact_support_fraction = 0.0;
  double rank_fraction = 0.0;
  double median_op_error = 0.0;
};
struct CompareResult {
  std::vector<ResultRow> rows;
  std::vector<MethodSummary> methods;
};
/// Shared data per trial across cfg.methods ("lvglasso", "glasso",
/// "neighborhood"). Support is always scored against S*, so on h > 0 models
/// the confounded baselines are charged for the latent structure they miss.
CompareResult run_baseline_compare(const ExperimentConfig& cfg);

enum class TableFormat { Csv, Json };

extern const char kResultHeader[];

/// Serialize rows sorted by (experiment, p, h, n, d, s_min, delta, method,
/// trial). Doubles use shortest round-trip formatting, so parse + re-emit is
/// byte-identical and output does not depend on the jobs count.
std::string format_results(std::vector<ResultRow> rows,
                           TableFormat format = TableFormat::Csv);
void emit_results(std::vector<ResultRow> rows, const std::string& path,
                  TableFormat format = TableFormat::Csv);
std::vector<ResultRow> parse_results_csv(const std::string& path);

/// Markdown summary: one table per experiment id with per-cell aggregates
/// (trial count, success fractions, median operator error).
std::string render_markdown_report(const std::vector<ResultRow>& rows);

/// Dispatch on cfg.kind, write cfg.output_path when set, return the rows.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// JSON config document mirroring ExperimentConfig field for field; missing
/// fields keep their defaults. See the schema block in the README.
ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

namespace detail {

/// Run fn(0..total-1) on up to jobs threads. Callers preallocate one output
/// slot per index, so results never depend on scheduling order.
void parallel_for(int total, int jobs, const std::function<void(int)>& fn);

/// Degree column for result rows: the structural degree of the graph kind.
int graph_degree(const ModelSpec& spec);

}  // namespace detail

}  // namespace lvggm
