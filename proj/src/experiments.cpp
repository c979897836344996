#include "lvggm/experiments.hpp"

#include "lvggm/baselines.hpp"
#include "lvggm/matrix_io.hpp"
#include "lvggm/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace lvggm {

namespace {

// Neighborhood lambda scale c in c * sqrt(log p / n), calibrated so the
// bounded-degree chain regime (p = 200, n = 2p) sits mid-window: exact
// recovery holds for c in roughly [2.0, 2.15] there.
constexpr double kNeighborhoodScale = 2.1;

// Upper end of the "small delta" range used for the perturbation linear fit.
constexpr double kSmallDeltaMax = 0.1;

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Scaling: return "scaling";
    case ExperimentKind::Phase: return "phase";
    case ExperimentKind::MinSignal: return "minsignal";
    case ExperimentKind::Perturbation: return "perturbation";
    case ExperimentKind::BaselineCompare: return "baseline_compare";
  }
  return "unknown";
}

ExperimentKind kind_from_name(const std::string& name) {
  if (name == "scaling") return ExperimentKind::Scaling;
  if (name == "phase") return ExperimentKind::Phase;
  if (name == "minsignal") return ExperimentKind::MinSignal;
  if (name == "perturbation") return ExperimentKind::Perturbation;
  if (name == "baseline_compare") return ExperimentKind::BaselineCompare;
  throw std::invalid_argument("unknown experiment kind: " + name);
}

RegRuleKind reg_kind_from_name(const std::string& name) {
  if (name == "fixed") return RegRuleKind::Fixed;
  if (name == "theory_scaled") return RegRuleKind::TheoryScaled;
  if (name == "holdout") return RegRuleKind::Holdout;
  throw std::invalid_argument("unknown reg rule: " + name);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Plain least squares y = intercept + slope * x. Constant y fits perfectly
// (r_squared = 1), matching the log-log fit convention.
LineFit linear_fit(const std::vector<std::pair<double, double>>& pts) {
  LineFit fit;
  const auto n = double(pts.size());
  if (pts.size() < 2) return fit;
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (const auto& [x, y] : pts) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
    ss_tot += (y - my) * (y - my);
  }
  fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

TrialOutput default_solve(const TrialInput& in) {
  RegParams reg;
  reg.lambda_n = in.reg.lambda_n;
  reg.gamma = in.reg.gamma;
  auto [est, rep] = solve_lvglasso(*in.sigma_input, reg);
  return {std::move(est), rep.iterations};
}

ResultRow make_row(const char* experiment, const ModelSpec& spec, int n,
                   int trial, std::uint64_t seed, const char* method,
                   const RegChoice& reg) {
  ResultRow row;
  row.experiment = experiment;
  row.p = spec.p;
  row.h = spec.h;
  row.n = n;
  row.d = detail::graph_degree(spec);
  row.s_min = spec.s_min;
  row.trial = trial;
  row.seed = seed;
  row.method = method;
  row.lambda = reg.lambda_n;
  row.gamma = reg.gamma;
  return row;
}

/// Shared per-trial path of the lvglasso sweeps: fresh model and sample per
/// (cell, trial), regularization from the config rule, scored against truth.
ResultRow lv_trial(const ExperimentConfig& cfg, const char* experiment,
                   ModelSpec spec, int n, std::uint64_t cell, int trial,
                   const TrialSolver& solver) {
  spec.seed = derive_seed(cfg.base_seed, {cell, std::uint64_t(trial), 0});
  const GroundTruth truth = generate_ground_truth(spec);
  const SampleSet samples = sample_gaussian(
      truth.sigma, n, derive_seed(cfg.base_seed, {cell, std::uint64_t(trial), 1}));
  const RegChoice reg = choose_lambda(cfg.reg, spec.p, n, &samples);

  TrialInput in;
  in.truth = &truth;
  in.samples = &samples;
  in.sigma_input = &samples.sigma_hat;
  in.n = n;
  in.trial = trial;
  in.seed = spec.seed;
  in.reg = reg;

  const auto t0 = std::chrono::steady_clock::now();
  const TrialOutput out = solver ? solver(in) : default_solve(in);
  const auto t1 = std::chrono::steady_clock::now();

  ResultRow row = make_row(experiment, spec, n, trial, spec.seed, "lvglasso", reg);
  row.report = score_recovery(out.est, truth);
  row.iterations = out.iterations;
  if (cfg.record_timing)
    row.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  return row;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment, a.p, a.h, a.n, a.d, a.s_min, a.delta, a.method,
                    a.trial) < std::tie(b.experiment, b.p, b.h, b.n, b.d, b.s_min,
                                        b.delta, b.method, b.trial);
  });
}

void append_row_csv(std::string& out, const ResultRow& r) {
  out += r.experiment;
  out += ',';
  out += std::to_string(r.p);
  out += ',';
  out += std::to_string(r.h);
  out += ',';
  out += std::to_string(r.n);
  out += ',';
  out += std::to_string(r.d);
  out += ',';
  out += format_double(r.s_min);
  out += ',';
  out += format_double(r.delta);
  out += ',';
  out += std::to_string(r.trial);
  out += ',';
  out += std::to_string(r.seed);
  out += ',';
  out += r.method;
  out += ',';
  out += format_double(r.lambda);
  out += ',';
  out += format_double(r.gamma);
  out += ',';
  out += r.report.exact_signed_support ? '1' : '0';
  out += ',';
  out += format_double(r.report.support_precision);
  out += ',';
  out += format_double(r.report.support_recall);
  out += ',';
  out += std::to_string(r.report.sign_errors);
  out += ',';
  out += r.report.rank_recovered ? '1' : '0';
  out += ',';
  out += std::to_string(r.report.effective_rank);
  out += ',';
  out += format_double(r.report.op_norm_error);
  out += ',';
  out += format_double(r.report.frob_error_S);
  out += ',';
  out += format_double(r.report.frob_error_L);
  out += ',';
  out += std::to_string(r.iterations);
  out += ',';
  out += std::to_string(r.wall_ms);
  out += '\n';
}

void append_row_json(std::string& out, const ResultRow& r) {
  out += "  {\"experiment\":\"" + r.experiment + "\"";
  out += ",\"p\":" + std::to_string(r.p);
  out += ",\"h\":" + std::to_string(r.h);
  out += ",\"n\":" + std::to_string(r.n);
  out += ",\"d\":" + std::to_string(r.d);
  out += ",\"s_min\":" + format_double(r.s_min);
  out += ",\"delta\":" + format_double(r.delta);
  out += ",\"trial\":" + std::to_string(r.trial);
  out += ",\"seed\":" + std::to_string(r.seed);
  out += ",\"method\":\"" + r.method + "\"";
  out += ",\"lambda\":" + format_double(r.lambda);
  out += ",\"gamma\":" + format_double(r.gamma);
  out += std::string(",\"exact_signed_support\":") +
         (r.report.exact_signed_support ? "true" : "false");
  out += ",\"support_precision\":" + format_double(r.report.support_precision);
  out += ",\"support_recall\":" + format_double(r.report.support_recall);
  out += ",\"sign_errors\":" + std::to_string(r.report.sign_errors);
  out += std::string(",\"rank_recovered\":") +
         (r.report.rank_recovered ? "true" : "false");
  out += ",\"effective_rank\":" + std::to_string(r.report.effective_rank);
  out += ",\"op_norm_error\":" + format_double(r.report.op_norm_error);
  out += ",\"frob_error_S\":" + format_double(r.report.frob_error_S);
  out += ",\"frob_error_L\":" + format_double(r.report.frob_error_L);
  out += ",\"iterations\":" + std::to_string(r.iterations);
  out += ",\"wall_ms\":" + std::to_string(r.wall_ms);
  out += "}";
}

}  // namespace

const char kResultHeader[] =
    "experiment,p,h,n,d,s_min,delta,trial,seed,method,lambda,gamma,"
    "exact_signed_support,support_precision,support_recall,sign_errors,"
    "rank_recovered,effective_rank,op_norm_error,frob_error_S,frob_error_L,"
    "iterations,wall_ms";

RegRule RegRule::fixed(double lambda, double gamma) {
  RegRule r;
  r.kind = RegRuleKind::Fixed;
  r.lambda = lambda;
  r.gamma = gamma;
  return r;
}

RegRule RegRule::theory_scaled(double c, double gamma) {
  RegRule r;
  r.kind = RegRuleKind::TheoryScaled;
  r.c = c;
  r.gamma = gamma;
  return r;
}

RegRule RegRule::holdout(std::vector<double> grid, double fraction, double gamma) {
  RegRule r;
  r.kind = RegRuleKind::Holdout;
  r.grid = std::move(grid);
  r.holdout_fraction = fraction;
  r.gamma = gamma;
  return r;
}

void RegRule::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("RegRule: gamma must be > 0");
  switch (kind) {
    case RegRuleKind::Fixed:
      if (!(lambda > 0.0))
        throw std::invalid_argument("RegRule: fixed lambda must be > 0");
      break;
    case RegRuleKind::TheoryScaled:
      if (!(c > 0.0)) throw std::invalid_argument("RegRule: c must be > 0");
      break;
    case RegRuleKind::Holdout:
      if (grid.empty())
        throw std::invalid_argument("RegRule: holdout grid is empty");
      for (double v : grid)
        if (!(v > 0.0))
          throw std::invalid_argument("RegRule: holdout grid values must be > 0");
      if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0))
        throw std::invalid_argument("RegRule: holdout fraction must be in (0, 1)");
      break;
  }
}

RegChoice choose_lambda(const RegRule& rule, int p, int n,
                        const SampleSet* holdout_data) {
  rule.validate();
  if (p < 1 || n < 1)
    throw std::invalid_argument("choose_lambda: p and n must be >= 1");
  switch (rule.kind) {
    case RegRuleKind::Fixed:
      return {rule.lambda, rule.gamma};
    case RegRuleKind::TheoryScaled:
      return {rule.c * std::sqrt(double(p) / double(n)), rule.gamma};
    case RegRuleKind::Holdout:
      break;
  }
  if (holdout_data == nullptr)
    throw std::invalid_argument("choose_lambda: holdout rule requires sample data");
  const int rows = int(holdout_data->data.rows());
  if (rows < 2)
    throw std::invalid_argument("choose_lambda: holdout needs at least 2 rows");
  int n_val = std::max(1, int(std::lround(rule.holdout_fraction * rows)));
  if (n_val >= rows) n_val = rows - 1;
  const int n_train = rows - n_val;
  const SymMatrix sig_train =
      empirical_covariance(holdout_data->data.topRows(n_train));
  const SymMatrix sig_val =
      empirical_covariance(holdout_data->data.bottomRows(n_val));

  double best_ll = -std::numeric_limits<double>::infinity();
  double best_lambda = rule.grid.front();
  for (double lam : rule.grid) {
    RegParams reg;
    reg.lambda_n = lam;
    reg.gamma = rule.gamma;
    auto [est, rep] = solve_lvglasso(sig_train, reg);
    const double ll = gaussian_loglik(est.r_hat, sig_val);
    if (ll > best_ll) {
      best_ll = ll;
      best_lambda = lam;
    }
  }
  return {best_lambda, rule.gamma};
}

void ExperimentConfig::validate() const {
  model.validate();
  reg.validate();
  if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials >= 1");
  if (jobs < 1) throw std::invalid_argument("ExperimentConfig: jobs >= 1");
  const bool needs_n = kind != ExperimentKind::Perturbation || !population_covariance;
  if (needs_n && n_grid.empty())
    throw std::invalid_argument("ExperimentConfig: n_grid is empty");
  for (int n : n_grid)
    if (n < 1) throw std::invalid_argument("ExperimentConfig: n values must be >= 1");
  if (kind == ExperimentKind::Perturbation) {
    if (delta_grid.empty())
      throw std::invalid_argument("ExperimentConfig: delta_grid is empty");
    if (std::none_of(delta_grid.begin(), delta_grid.end(),
                     [](double d) { return d == 0.0; }))
      throw std::invalid_argument(
          "ExperimentConfig: delta_grid must include the 0 control cell");
    if (perturb_k < 1)
      throw std::invalid_argument("ExperimentConfig: perturb_k >= 1");
    if (population_covariance && reg.kind != RegRuleKind::Fixed)
      throw std::invalid_argument(
          "ExperimentConfig: population mode has no sample size, use a fixed rule");
  }
  if (kind == ExperimentKind::BaselineCompare) {
    if (methods.empty())
      throw std::invalid_argument("ExperimentConfig: methods is empty");
    for (const auto& m : methods)
      if (m != "lvglasso" && m != "glasso" && m != "neighborhood")
        throw std::invalid_argument("ExperimentConfig: unknown method " + m);
  }
}

namespace detail {

void parallel_for(int total, int jobs, const std::function<void(int)>& fn) {
  if (total <= 0) return;
  const int workers = std::min(std::max(jobs, 1), total);
  if (workers == 1) {
    for (int i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= total) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

int graph_degree(const ModelSpec& spec) {
  switch (spec.graph) {
    case GraphKind::Chain: return 2;
    case GraphKind::Grid: return 4;
    case GraphKind::ErdosRenyi: return spec.max_degree;
  }
  return 0;
}

}  // namespace detail

ScalingResult run_scaling_experiment(const ExperimentConfig& cfg,
                                     TrialSolver solver) {
  cfg.validate();
  const int cells = int(cfg.n_grid.size());
  const int total = cells * cfg.trials;
  ScalingResult res;
  res.rows.resize(total);
  detail::parallel_for(total, cfg.jobs, [&](int idx) {
    const int cell = idx / cfg.trials;
    const int trial = idx % cfg.trials;
    res.rows[idx] = lv_trial(cfg, "scaling", cfg.model, cfg.n_grid[cell],
                             std::uint64_t(cell), trial, solver);
  });
  for (int cell = 0; cell < cells; ++cell) {
    std::vector<double> errs;
    errs.reserve(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t)
      errs.push_back(res.rows[cell * cfg.trials + t].report.op_norm_error);
    res.median_errors.emplace_back(double(cfg.n_grid[cell]), median(errs));
  }
  if (res.median_errors.size() >= 2) res.fit = fit_loglog_slope(res.median_errors);
  return res;
}

PhaseResult run_phase_experiment(const ExperimentConfig& cfg, TrialSolver solver) {
  cfg.validate();
  const bool minsignal = cfg.kind == ExperimentKind::MinSignal;
  const char* id = minsignal ? "minsignal" : "phase";
  std::vector<int> pvals = cfg.p_grid;
  if (pvals.empty() || minsignal) pvals = {cfg.model.p};
  std::vector<double> svals = minsignal ? cfg.s_min_grid : std::vector<double>{};
  if (svals.empty()) svals = {cfg.model.s_min};

  struct Cell {
    int n, p;
    double s;
  };
  std::vector<Cell> grid;
  for (int n : cfg.n_grid)
    for (int p : pvals)
      for (double s : svals) grid.push_back({n, p, s});

  const int total = int(grid.size()) * cfg.trials;
  PhaseResult res;
  res.rows.resize(total);
  detail::parallel_for(total, cfg.jobs, [&](int idx) {
    const int cell = idx / cfg.trials;
    const int trial = idx % cfg.trials;
    ModelSpec spec = cfg.model;
    spec.p = grid[cell].p;
    // keep the template's magnitude band width when sweeping s_min
    spec.s_max = grid[cell].s + (cfg.model.s_max - cfg.model.s_min);
    spec.s_min = grid[cell].s;
    res.rows[idx] = lv_trial(cfg, id, spec, grid[cell].n, std::uint64_t(cell),
                             trial, solver);
  });
  for (int cell = 0; cell < int(grid.size()); ++cell) {
    int wins = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& rep = res.rows[cell * cfg.trials + t].report;
      if (rep.exact_signed_support && rep.rank_recovered) ++wins;
    }
    res.cells.push_back({grid[cell].n, grid[cell].p, grid[cell].s,
                         double(wins) / double(cfg.trials)});
  }
  return res;
}

PerturbationResult run_perturbation_experiment(const ExperimentConfig& cfg,
                                               TrialSolver solver) {
  cfg.validate();
  const int cells = int(cfg.delta_grid.size());
  const int total = cells * cfg.trials;
  const int n = cfg.population_covariance ? 0 : cfg.n_grid.front();

  PerturbationResult res;
  std::vector<ResultRow> slots(total);
  std::vector<char> present(total, 0);
  std::vector<std::string> notes(total);

  detail::parallel_for(total, cfg.jobs, [&](int idx) {
    const int cell = idx / cfg.trials;
    const int trial = idx % cfg.trials;
    const double delta = cfg.delta_grid[cell];
    // model and perturbation direction are shared across the delta grid so
    // only delta moves within a trial
    ModelSpec spec = cfg.model;
    spec.seed = derive_seed(cfg.base_seed, {std::uint64_t(trial), 0});
    const GroundTruth truth = generate_ground_truth(spec);

    Perturbation pert;
    try {
      pert = perturb_sparse_lowrank(truth.k_marg, delta, cfg.perturb_k,
                                    derive_seed(cfg.base_seed,
                                                {std::uint64_t(trial), 2}));
    } catch (const std::exception& e) {
      notes[idx] = std::string("delta=") + format_double(delta) + " trial=" +
                   std::to_string(trial) + " skipped: " + e.what();
      return;
    }

    SampleSet samples;
    SymMatrix sigma_input;
    if (cfg.population_covariance) {
      sigma_input = pd_inverse(pert.k_tilde);
    } else {
      samples = sample_gaussian(pd_inverse(pert.k_tilde), n,
                                derive_seed(cfg.base_seed,
                                            {std::uint64_t(trial), 1}));
      sigma_input = samples.sigma_hat;
    }
    const RegChoice reg = choose_lambda(cfg.reg, spec.p, std::max(n, 1),
                                        cfg.population_covariance ? nullptr
                                                                  : &samples);

    TrialInput in;
    in.truth = &truth;
    in.samples = cfg.population_covariance ? nullptr : &samples;
    in.sigma_input = &sigma_input;
    in.n = n;
    in.trial = trial;
    in.seed = spec.seed;
    in.reg = reg;

    const auto t0 = std::chrono::steady_clock::now();
    const TrialOutput out = solver ? solver(in) : default_solve(in);
    const auto t1 = std::chrono::steady_clock::now();

    ResultRow row =
        make_row("perturbation", spec, n, trial, spec.seed, "lvglasso", reg);
    row.delta = delta;
    row.report = score_recovery(out.est, truth);
    row.iterations = out.iterations;
    if (cfg.record_timing)
      row.wall_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    slots[idx] = std::move(row);
    present[idx] = 1;
  });

  for (int idx = 0; idx < total; ++idx) {
    if (present[idx]) {
      res.rows.push_back(std::move(slots[idx]));
    } else {
      ++res.skipped;
      std::cerr << "perturbation: " << notes[idx] << "\n";
    }
  }

  std::vector<std::pair<double, double>> small;
  for (int cell = 0; cell < cells; ++cell) {
    double sum = 0;
    int count = 0;
    for (const auto& row : res.rows) {
      if (row.delta == cfg.delta_grid[cell]) {
        sum += row.report.frob_error_S;
        ++count;
      }
    }
    if (count == 0) continue;
    res.mean_errors_s.emplace_back(cfg.delta_grid[cell], sum / count);
    if (cfg.delta_grid[cell] <= kSmallDeltaMax)
      small.emplace_back(cfg.delta_grid[cell], sum / count);
  }
  res.small_delta_fit = linear_fit(small);
  return res;
}

CompareResult run_baseline_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const int cells = int(cfg.n_grid.size());
  const int total = cells * cfg.trials;
  CompareResult res;
  std::vector<std::vector<ResultRow>> slots(total);

  detail::parallel_for(total, cfg.jobs, [&](int idx) {
    const int cell = idx / cfg.trials;
    const int trial = idx % cfg.trials;
    const int n = cfg.n_grid[cell];
    ModelSpec spec = cfg.model;
    spec.seed = derive_seed(cfg.base_seed, {std::uint64_t(cell), std::uint64_t(trial), 0});
    const GroundTruth truth = generate_ground_truth(spec);
    const SampleSet samples = sample_gaussian(
        truth.sigma, n,
        derive_seed(cfg.base_seed, {std::uint64_t(cell), std::uint64_t(trial), 1}));
    const RegChoice reg = choose_lambda(cfg.reg, spec.p, n, &samples);

    for (const auto& method : cfg.methods) {
      ResultRow row =
          make_row("baseline_compare", spec, n, trial, spec.seed, method.c_str(), reg);
      const auto t0 = std::chrono::steady_clock::now();
      if (method == "lvglasso") {
        RegParams rp;
        rp.lambda_n = reg.lambda_n;
        rp.gamma = reg.gamma;
        auto [est, rep] = solve_lvglasso(samples.sigma_hat, rp);
        row.report = score_recovery(est, truth);
        row.iterations = rep.iterations;
      } else if (method == "glasso") {
        // matched l1 level: the same per-entry penalty the latent program
        // spends on S
        const double lam = reg.lambda_n * reg.gamma;
        row.lambda = lam;
        row.gamma = 0.0;
        auto [k_hat, rep] = glasso(samples.sigma_hat, lam);
        Estimate est;
        est.s_hat = k_hat;
        est.l_hat = SymMatrix(spec.p);
        est.r_hat = k_hat;
        row.report = score_recovery(est, truth);
        row.iterations = rep.iterations;
      } else {  // neighborhood
        const double lam =
            kNeighborhoodScale * std::sqrt(std::log(double(spec.p)) / double(n));
        row.lambda = lam;
        row.gamma = 0.0;
        const NeighborhoodSelection sel = neighborhood_select_signed(samples, lam);
        Estimate est;
        est.s_hat = sel.sign_pattern;
        est.l_hat = SymMatrix(spec.p);
        est.r_hat = sel.sign_pattern;
        row.report = score_recovery(est, truth);
      }
      const auto t1 = std::chrono::steady_clock::now();
      if (cfg.record_timing)
        row.wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
      slots[idx].push_back(std::move(row));
    }
  });

  for (auto& group : slots)
    for (auto& row : group) res.rows.push_back(std::move(row));

  for (const auto& method : cfg.methods) {
    MethodSummary s;
    s.method = method;
    std::vector<double> ops;
    int exact = 0, rank = 0, count = 0;
    for (const auto& row : res.rows) {
      if (row.method != method) continue;
      ++count;
      exact += row.report.exact_signed_support;
      rank += row.report.rank_recovered;
      ops.push_back(row.report.op_norm_error);
    }
    if (count > 0) {
      s.exact_support_fraction = double(exact) / count;
      s.rank_fraction = double(rank) / count;
      s.median_op_error = median(ops);
    }
    res.methods.push_back(std::move(s));
  }
  return res;
}

std::string format_results(std::vector<ResultRow> rows, TableFormat format) {
  sort_rows(rows);
  std::string out;
  if (format == TableFormat::Csv) {
    out += kResultHeader;
    out += '\n';
    for (const auto& r : rows) append_row_csv(out, r);
    return out;
  }
  out += "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    append_row_json(out, rows[i]);
    out += i + 1 < rows.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

void emit_results(std::vector<ResultRow> rows, const std::string& path,
                  TableFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_results: cannot open " + path);
  os << format_results(std::move(rows), format);
  if (!os) throw std::runtime_error("emit_results: write failed for " + path);
}

std::vector<ResultRow> parse_results_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("parse_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kResultHeader)
    throw std::runtime_error("parse_results_csv: bad header in " + path);
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 23)
      throw std::runtime_error("parse_results_csv: bad field count in " + path);
    ResultRow r;
    r.experiment = f[0];
    r.p = std::stoi(f[1]);
    r.h = std::stoi(f[2]);
    r.n = std::stoi(f[3]);
    r.d = std::stoi(f[4]);
    r.s_min = std::strtod(f[5].c_str(), nullptr);
    r.delta = std::strtod(f[6].c_str(), nullptr);
    r.trial = std::stoi(f[7]);
    r.seed = std::stoull(f[8]);
    r.method = f[9];
    r.lambda = std::strtod(f[10].c_str(), nullptr);
    r.gamma = std::strtod(f[11].c_str(), nullptr);
    r.report.exact_signed_support = f[12] == "1";
    r.report.support_precision = std::strtod(f[13].c_str(), nullptr);
    r.report.support_recall = std::strtod(f[14].c_str(), nullptr);
    r.report.sign_errors = std::stoi(f[15]);
    r.report.rank_recovered = f[16] == "1";
    r.report.effective_rank = std::stoi(f[17]);
    r.report.op_norm_error = std::strtod(f[18].c_str(), nullptr);
    r.report.frob_error_S = std::strtod(f[19].c_str(), nullptr);
    r.report.frob_error_L = std::strtod(f[20].c_str(), nullptr);
    r.iterations = std::stoi(f[21]);
    r.wall_ms = std::stoll(f[22]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_markdown_report(const std::vector<ResultRow>& rows_in) {
  std::vector<ResultRow> rows = rows_in;
  sort_rows(rows);
  std::string out = "# Experiment report\n";
  if (rows.empty()) {
    out += "\n(no rows)\n";
    return out;
  }
  std::size_t i = 0;
  while (i < rows.size()) {
    const std::string& exp = rows[i].experiment;
    out += "\n## " + exp + "\n\n";
    out += "| p | h | n | d | s_min | delta | method | trials | exact | rank |"
           " median op err | mean frob S |\n";
    out += "|--:|--:|--:|--:|--:|--:|:--|--:|--:|--:|--:|--:|\n";
    while (i < rows.size() && rows[i].experiment == exp) {
      const std::size_t start = i;
      const auto key = [](const ResultRow& r) {
        return std::tie(r.p, r.h, r.n, r.d, r.s_min, r.delta, r.method);
      };
      int exact = 0, rank = 0;
      double frob_sum = 0;
      std::vector<double> ops;
      while (i < rows.size() && rows[i].experiment == exp &&
             key(rows[i]) == key(rows[start])) {
        exact += rows[i].report.exact_signed_support;
        rank += rows[i].report.rank_recovered;
        frob_sum += rows[i].report.frob_error_S;
        ops.push_back(rows[i].report.op_norm_error);
        ++i;
      }
      const auto count = double(i - start);
      const ResultRow& r = rows[start];
      out += "| " + std::to_string(r.p) + " | " + std::to_string(r.h) + " | " +
             std::to_string(r.n) + " | " + std::to_string(r.d) + " | " +
             format_double(r.s_min) + " | " + format_double(r.delta) + " | " +
             r.method + " | " + std::to_string(int(count)) + " | " +
             format_double(exact / count) + " | " + format_double(rank / count) +
             " | " + format_double(median(ops)) + " | " +
             format_double(frob_sum / count) + " |\n";
    }
  }
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  switch (cfg.kind) {
    case ExperimentKind::Scaling:
      rows = run_scaling_experiment(cfg).rows;
      break;
    case ExperimentKind::Phase:
    case ExperimentKind::MinSignal:
      rows = run_phase_experiment(cfg).rows;
      break;
    case ExperimentKind::Perturbation:
      rows = run_perturbation_experiment(cfg).rows;
      break;
    case ExperimentKind::BaselineCompare:
      rows = run_baseline_compare(cfg).rows;
      break;
  }
  if (!cfg.output_path.empty()) emit_results(rows, cfg.output_path);
  return rows;
}

ExperimentConfig config_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  ExperimentConfig cfg;
  if (j.contains("kind")) cfg.kind = kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("model")) {
    const auto& m = j.at("model");
    cfg.model.p = m.value("p", cfg.model.p);
    cfg.model.h = m.value("h", cfg.model.h);
    if (m.contains("graph"))
      cfg.model.graph = graph_kind_from_name(m.at("graph").get<std::string>());
    cfg.model.max_degree = m.value("max_degree", cfg.model.max_degree);
    cfg.model.s_min = m.value("s_min", cfg.model.s_min);
    cfg.model.s_max = m.value("s_max", cfg.model.s_max);
    cfg.model.latent_coupling = m.value("latent_coupling", cfg.model.latent_coupling);
    cfg.model.diagonal_boost = m.value("diagonal_boost", cfg.model.diagonal_boost);
    cfg.model.seed = m.value("seed", cfg.model.seed);
  }
  cfg.n_grid = j.value("n_grid", cfg.n_grid);
  cfg.p_grid = j.value("p_grid", cfg.p_grid);
  cfg.delta_grid = j.value("delta_grid", cfg.delta_grid);
  cfg.s_min_grid = j.value("s_min_grid", cfg.s_min_grid);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  if (j.contains("reg_rule")) {
    const auto& r = j.at("reg_rule");
    if (r.contains("kind"))
      cfg.reg.kind = reg_kind_from_name(r.at("kind").get<std::string>());
    cfg.reg.lambda = r.value("lambda", cfg.reg.lambda);
    cfg.reg.c = r.value("c", cfg.reg.c);
    cfg.reg.gamma = r.value("gamma", cfg.reg.gamma);
    cfg.reg.grid = r.value("grid", cfg.reg.grid);
    cfg.reg.holdout_fraction = r.value("fraction", cfg.reg.holdout_fraction);
  }
  cfg.output_path = j.value("output_path", cfg.output_path);
  cfg.methods = j.value("methods", cfg.methods);
  cfg.population_covariance =
      j.value("population_covariance", cfg.population_covariance);
  cfg.perturb_k = j.value("perturb_k", cfg.perturb_k);
  cfg.record_timing = j.value("record_timing", cfg.record_timing);
  cfg.jobs = j.value("jobs", cfg.jobs);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace lvggm
