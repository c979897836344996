// Command-line front end: model generation, one-off solves, and the
// experiment sweeps, all driven by the library. Sweeps read a JSON config
// (see README for the schema); the common flags override config fields.
#include "CLI11.hpp"

#include "lvggm/baselines.hpp"
#include "lvggm/experiments.hpp"
#include "lvggm/matrix_io.hpp"
#include "lvggm/metrics.hpp"
#include "lvggm/model_gen.hpp"
#include "lvggm/solver.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace lvggm;

struct SweepFlags {
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  int jobs = 0;                 // 0: keep config value
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool timing = false;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out_path, "output table path (overrides config)");
  cmd->add_option("--format", flags.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", flags.jobs, "worker threads (overrides config)");
  cmd->add_option("--seed", flags.seed, "base seed (overrides config)")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_flag("--timing", flags.timing,
                "record wall_ms per row (breaks byte-identical reruns)");
}

ExperimentConfig resolve_config(const SweepFlags& flags, ExperimentKind kind) {
  ExperimentConfig cfg = load_config(flags.config_path);
  cfg.kind = kind;
  if (!flags.out_path.empty()) cfg.output_path = flags.out_path;
  if (flags.jobs > 0) cfg.jobs = flags.jobs;
  if (flags.seed_set) cfg.base_seed = flags.seed;
  if (flags.timing) cfg.record_timing = true;
  return cfg;
}

TableFormat parse_format(const std::string& name) {
  return name == "json" ? TableFormat::Json : TableFormat::Csv;
}

void write_rows(const ExperimentConfig& cfg, const SweepFlags& flags,
                std::vector<ResultRow> rows) {
  if (cfg.output_path.empty()) {
    std::cout << format_results(std::move(rows), parse_format(flags.format));
    return;
  }
  emit_results(std::move(rows), cfg.output_path, parse_format(flags.format));
  std::cout << "wrote " << cfg.output_path << "\n";
}

int run_generate(const ModelSpec& spec, const std::string& out_dir) {
  const GroundTruth truth = generate_ground_truth(spec);
  export_ground_truth(truth, out_dir);
  std::cout << "p=" << spec.p << " h=" << spec.h << " graph="
            << graph_kind_name(spec.graph) << " edges=" << truth.edges.size()
            << " -> " << out_dir << "\n";
  return 0;
}

int run_solve(const std::string& model_dir, int n, std::uint64_t sample_seed,
              double lambda, double gamma) {
  const GroundTruth truth = import_ground_truth(model_dir);
  const SampleSet samples = sample_gaussian(truth.sigma, n, sample_seed);
  RegParams reg;
  reg.lambda_n = lambda;
  reg.gamma = gamma;
  const auto [est, rep] = solve_lvglasso(samples.sigma_hat, reg);
  const RecoveryReport rec = score_recovery(est, truth);
  std::cout << "status=" << (rep.status == SolveStatus::Converged ? "converged"
                                                                  : "max_iter")
            << " iterations=" << rep.iterations
            << " kkt=" << format_double(rep.kkt_residual) << "\n"
            << "exact_signed_support=" << rec.exact_signed_support
            << " precision=" << format_double(rec.support_precision)
            << " recall=" << format_double(rec.support_recall)
            << " sign_errors=" << rec.sign_errors << "\n"
            << "rank_recovered=" << rec.rank_recovered
            << " effective_rank=" << rec.effective_rank << " (h=" << truth.h
            << ")\n"
            << "op_norm_error=" << format_double(rec.op_norm_error)
            << " frob_S=" << format_double(rec.frob_error_S)
            << " frob_L=" << format_double(rec.frob_error_L) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-variable Gaussian graphical model experiments"};
  app.require_subcommand(1);

  // generate
  ModelSpec gen_spec;
  std::string gen_graph = "erdos_renyi";
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "export a ground-truth model");
  gen->add_option("--p", gen_spec.p, "observed dimension");
  gen->add_option("--hidden", gen_spec.h, "hidden dimension");
  gen->add_option("--graph", gen_graph, "chain, grid, or erdos_renyi");
  gen->add_option("--max-degree", gen_spec.max_degree, "Erdos-Renyi degree cap");
  gen->add_option("--s-min", gen_spec.s_min, "minimum edge magnitude");
  gen->add_option("--s-max", gen_spec.s_max, "maximum edge magnitude");
  gen->add_option("--coupling", gen_spec.latent_coupling, "latent coupling");
  gen->add_option("--boost", gen_spec.diagonal_boost, "diagonal boost");
  gen->add_option("--seed", gen_spec.seed, "model seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // solve
  std::string solve_model;
  int solve_n = 600;
  std::uint64_t solve_seed = 1;
  double solve_lambda = 0.5;
  double solve_gamma = 1.0;
  auto* solve = app.add_subcommand("solve", "sample and solve one instance");
  solve->add_option("--model", solve_model, "exported model directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  solve->add_option("--n", solve_n, "sample size")->check(CLI::PositiveNumber);
  solve->add_option("--sample-seed", solve_seed, "sampling seed");
  solve->add_option("--lambda", solve_lambda, "lambda_n")->check(CLI::PositiveNumber);
  solve->add_option("--gamma", solve_gamma, "gamma")->check(CLI::PositiveNumber);

  // sweeps
  SweepFlags scaling_flags, phase_flags, minsignal_flags, perturb_flags,
      compare_flags;
  auto* scaling = app.add_subcommand("scaling", "operator-error scaling in n");
  add_sweep_flags(scaling, scaling_flags);
  auto* phase = app.add_subcommand("phase", "success probability over (n, p)");
  add_sweep_flags(phase, phase_flags);
  auto* minsignal =
      app.add_subcommand("minsignal", "success probability over (n, s_min)");
  add_sweep_flags(minsignal, minsignal_flags);
  auto* perturb =
      app.add_subcommand("perturb", "error growth under K + delta z z^T");
  add_sweep_flags(perturb, perturb_flags);
  auto* compare =
      app.add_subcommand("compare", "lvglasso vs glasso vs neighborhood");
  add_sweep_flags(compare, compare_flags);

  // report
  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "render a markdown summary");
  report->add_option("--in", report_in, "results CSV")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "markdown path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_spec.graph = graph_kind_from_name(gen_graph);
      return run_generate(gen_spec, gen_out);
    }
    if (solve->parsed())
      return run_solve(solve_model, solve_n, solve_seed, solve_lambda,
                       solve_gamma);
    if (scaling->parsed()) {
      const ExperimentConfig cfg =
          resolve_config(scaling_flags, ExperimentKind::Scaling);
      ScalingResult res = run_scaling_experiment(cfg);
      for (const auto& [n, err] : res.median_errors)
        std::cout << "n=" << int(n) << " median_op_error=" << format_double(err)
                  << "\n";
      std::cout << "loglog slope=" << format_double(res.fit.slope)
                << " r2=" << format_double(res.fit.r_squared) << "\n";
      write_rows(cfg, scaling_flags, std::move(res.rows));
      return 0;
    }
    if (phase->parsed() || minsignal->parsed()) {
      const bool is_phase = phase->parsed();
      const ExperimentConfig cfg = resolve_config(
          is_phase ? phase_flags : minsignal_flags,
          is_phase ? ExperimentKind::Phase : ExperimentKind::MinSignal);
      PhaseResult res = run_phase_experiment(cfg);
      for (const auto& cell : res.cells)
        std::cout << "n=" << cell.n << " p=" << cell.p
                  << " s_min=" << format_double(cell.s_min)
                  << " success=" << format_double(cell.success_fraction) << "\n";
      write_rows(cfg, is_phase ? phase_flags : minsignal_flags,
                 std::move(res.rows));
      return 0;
    }
    if (perturb->parsed()) {
      const ExperimentConfig cfg =
          resolve_config(perturb_flags, ExperimentKind::Perturbation);
      PerturbationResult res = run_perturbation_experiment(cfg);
      for (const auto& [delta, err] : res.mean_errors_s)
        std::cout << "delta=" << format_double(delta)
                  << " mean_frob_S=" << format_double(err) << "\n";
      std::cout << "small-delta fit slope=" << format_double(res.small_delta_fit.slope)
                << " r2=" << format_double(res.small_delta_fit.r_squared)
                << " skipped=" << res.skipped << "\n";
      write_rows(cfg, perturb_flags, std::move(res.rows));
      return 0;
    }
    if (compare->parsed()) {
      const ExperimentConfig cfg =
          resolve_config(compare_flags, ExperimentKind::BaselineCompare);
      CompareResult res = run_baseline_compare(cfg);
      for (const auto& m : res.methods)
        std::cout << m.method << ": exact=" << format_double(m.exact_support_fraction)
                  << " rank=" << format_double(m.rank_fraction)
                  << " median_op_error=" << format_double(m.median_op_error)
                  << "\n";
      write_rows(cfg, compare_flags, std::move(res.rows));
      return 0;
    }
    if (report->parsed()) {
      const std::string md = render_markdown_report(parse_results_csv(report_in));
      if (report_out.empty()) {
        std::cout << md;
      } else {
        std::ofstream os(report_out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + report_out);
        os << md;
        std::cout << "wrote " << report_out << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
