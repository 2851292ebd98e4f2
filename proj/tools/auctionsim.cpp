// Experiment CLI for the pay-per-click auction simulator.
//
//   auctionsim simulate    --config cfg.json   single-horizon seeded runs
//   auctionsim sweep       --config cfg.json   runs across a horizon grid
//   auctionsim lower-bound --config cfg.json   minimax instance-pair sweep
//   auctionsim ic-check    --config cfg.json   incentive certificates
//   auctionsim report      --input a.csv [...] summary + slope fits
//
// Exit codes: 0 success, 2 configuration/validation error, 3 a report
// assertion failed (--assert), 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppc/harness.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAssertion = 3;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

ppc::ExperimentConfig load_config(const std::string& path, ppc::ExperimentKind kind,
                                  const std::string& output_override, long long seeds_override,
                                  long long master_seed_override) {
  nlohmann::json doc = load_json(path);
  ppc::ExperimentConfig cfg = ppc::parse_config(doc);
  cfg.kind = kind;
  if (!output_override.empty()) cfg.output_dir = output_override;
  if (seeds_override > 0) cfg.seeds = static_cast<std::size_t>(seeds_override);
  if (master_seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(master_seed_override);
  return cfg;
}

void print_sweep_summary(const ppc::SweepSummary& summary) {
  for (const auto& s : summary.per_t)
    std::printf("%s T=%lld runs=%zu mean_regret=%.6g (se %.3g) negative_fraction=%.3f\n",
                s.experiment_id.c_str(), s.T, s.runs, s.mean_regret, s.se_regret,
                s.negative_fraction);
  if (summary.slope) std::printf("log-log slope(mean regret): %.4f\n", *summary.slope);
  if (summary.slope_max_pair)
    std::printf("log-log slope(max-over-pair): %.4f\n", *summary.slope_max_pair);
}

int run_grid_experiment(const std::string& config_path, ppc::ExperimentKind kind,
                        const std::string& output, long long seeds, long long master_seed) {
  const ppc::ExperimentConfig cfg =
      load_config(config_path, kind, output, seeds, master_seed);
  const ppc::SweepSummary summary = ppc::run_experiment(cfg);
  print_sweep_summary(summary);
  std::printf("wrote %s/%s.csv\n", cfg.output_dir.c_str(), cfg.experiment_id.c_str());
  return 0;
}

int run_ic(const std::string& config_path, const std::string& output, long long seeds,
           long long master_seed) {
  const ppc::ExperimentConfig cfg =
      load_config(config_path, ppc::ExperimentKind::IcCheck, output, seeds, master_seed);
  const ppc::IcCheckReport report = ppc::run_ic_check(cfg);
  std::printf("stage max_gain: %.3g over %zu states (monotone: %s)\n", report.stage.max_gain,
              report.stage.states, report.stage.allocation_monotone ? "yes" : "no");
  std::printf("myerson max |residual|: %.3g over %zu states\n", report.myerson.max_abs_residual,
              report.myerson.states);
  for (const auto& f : report.global.families)
    std::printf("global %-28s max delta %.3g\n", f.name.c_str(), f.max_delta);
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& output,
               const std::string& assert_path) {
  std::vector<ppc::RowRecord> rows;
  for (const auto& path : inputs) {
    auto part = ppc::read_csv(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const ppc::SweepSummary summary = ppc::summarize_rows(std::move(rows));
  nlohmann::json out = ppc::summary_to_json(summary);

  bool all_pass = true;
  if (!assert_path.empty()) {
    const nlohmann::json doc = load_json(assert_path);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& res : ppc::evaluate_assertions(doc, summary)) {
      checks.push_back({{"name", res.name}, {"pass", res.pass}, {"detail", res.detail}});
      std::printf("[%s] %s: %s\n", res.pass ? "PASS" : "FAIL", res.name.c_str(),
                  res.detail.c_str());
      all_pass = all_pass && res.pass;
    }
    out["assertions"] = checks;
  }

  if (!output.empty()) {
    std::ofstream os(output);
    if (!os) throw std::runtime_error("cannot open " + output);
    os << out.dump(2) << "\n";
  } else {
    std::cout << out.dump(2) << "\n";
  }
  print_sweep_summary(summary);
  return all_pass ? 0 : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pay-per-click auction simulator and experiment harness"};
  app.require_subcommand(1);

  std::string config_path, output, assert_path;
  long long seeds = -1, master_seed = -1;
  std::vector<std::string> inputs;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--output", output, "output directory (overrides config)");
    cmd->add_option("--seeds", seeds, "seed count override");
    cmd->add_option("--master-seed", master_seed, "master seed override");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "seeded runs at a single horizon");
  add_common(simulate, true);
  CLI::App* sweep = app.add_subcommand("sweep", "runs across a horizon grid");
  add_common(sweep, true);
  CLI::App* lower = app.add_subcommand("lower-bound", "minimax instance-pair sweep");
  add_common(lower, true);
  CLI::App* ic = app.add_subcommand("ic-check", "incentive-compatibility certificates");
  add_common(ic, true);

  CLI::App* report = app.add_subcommand("report", "summarize CSVs, fit slopes, check thresholds");
  report->add_option("--input", inputs, "input CSV files")->required()->expected(-1);
  report->add_option("--output", output, "summary JSON path (default: stdout)");
  report->add_option("--assert", assert_path, "assertions JSON; exit 3 on failure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (app.got_subcommand(simulate))
      return run_grid_experiment(config_path, ppc::ExperimentKind::Simulate, output, seeds,
                                 master_seed);
    if (app.got_subcommand(sweep))
      return run_grid_experiment(config_path, ppc::ExperimentKind::Sweep, output, seeds,
                                 master_seed);
    if (app.got_subcommand(lower))
      return run_grid_experiment(config_path, ppc::ExperimentKind::LowerBound, output, seeds,
                                 master_seed);
    if (app.got_subcommand(ic)) return run_ic(config_path, output, seeds, master_seed);
    if (app.got_subcommand(report)) return run_report(inputs, output, assert_path);
  } catch (const ppc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
