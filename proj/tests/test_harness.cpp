#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include "ppc/harness.hpp"

using namespace ppc;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return json{{"experiment", "simulate"},
              {"experiment_id", "t"},
              {"mechanism", "oracle"},
              {"env", {{"ctrs", {0.5, 0.4}}, {"values", {1.0, 1.0}}}},
              {"T", 50},
              {"seeds", 4},
              {"master_seed", 9}};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The trailing wall_ms column is honest timing; everything before it must
// reproduce byte-for-byte.
std::string strip_wall_ms(const std::string& csv) {
  return std::regex_replace(csv, std::regex(",[0-9]+\n"), ",-\n");
}

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("ppc_harness_" + tag);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("log-log slope fits exact power laws", "[harness]") {
  auto series = [](double expnt) {
    std::vector<std::pair<double, double>> pts;
    for (double T : {1024.0, 4096.0, 16384.0}) pts.emplace_back(T, 3.0 * std::pow(T, expnt));
    return pts;
  };
  REQUIRE(fit_loglog_slope(series(0.5)) == Approx(0.5).margin(1e-9));
  REQUIRE(fit_loglog_slope(series(0.0)) == Approx(0.0).margin(1e-9));
  REQUIRE(fit_loglog_slope(series(1.0)) == Approx(1.0).margin(1e-9));
}

TEST_CASE("log-log slope input validation", "[harness]") {
  REQUIRE_THROWS_AS(fit_loglog_slope({{1024.0, 2.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_loglog_slope({{1024.0, 2.0}, {512.0, 3.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_loglog_slope({{1024.0, 2.0}, {2048.0, -3.0}}), std::domain_error);
  REQUIRE_THROWS_AS(fit_loglog_slope({{1024.0, 2.0}, {2048.0, 0.0}}), std::domain_error);
}

TEST_CASE("config parsing and field-path errors", "[harness]") {
  SECTION("a full document round-trips") {
    const ExperimentConfig cfg = parse_config(base_config());
    REQUIRE(cfg.kind == ExperimentKind::Simulate);
    REQUIRE(cfg.mechanism == MechanismKind::Oracle);
    REQUIRE(cfg.ctrs == std::vector<double>{0.5, 0.4});
    REQUIRE(cfg.horizons == std::vector<long long>{50});
    REQUIRE(cfg.seeds == 4);
  }
  SECTION("zero seeds") {
    json j = base_config();
    j["seeds"] = 0;
    try {
      parse_config(j);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(e.path() == "seeds");
    }
  }
  SECTION("ctr outside the open unit interval") {
    json j = base_config();
    j["env"]["ctrs"] = {0.5, 1.0};
    try {
      parse_config(j);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(e.path() == "env.ctrs[1]");
    }
  }
  SECTION("sweep horizons must increase strictly") {
    json j = base_config();
    j["experiment"] = "sweep";
    j.erase("T");
    j["horizons"] = {1024, 1024};
    REQUIRE_THROWS_AS(parse_config(j), ConfigError);
  }
  SECTION("missing horizons") {
    json j = base_config();
    j.erase("T");
    REQUIRE_THROWS_AS(parse_config(j), ConfigError);
  }
  SECTION("unknown mechanism") {
    json j = base_config();
    j["mechanism"] = "vcg2";
    REQUIRE_THROWS_AS(parse_config(j), ConfigError);
  }
  SECTION("gap requirement rejects gapless instances at load") {
    json j = base_config();
    j["env"]["ctrs"] = {0.5, 0.5};
    j["env"]["require_positive_gap"] = true;
    const ExperimentConfig cfg = parse_config(j);
    REQUIRE_THROWS_AS(build_env(cfg, 50), ConfigError);
  }
}

TEST_CASE("oracle simulate experiment: zero regret and deterministic CSV", "[harness]") {
  ExperimentConfig cfg = parse_config(base_config());
  const fs::path out1 = temp_dir("a"), out2 = temp_dir("b");
  cfg.output_dir = out1.string();
  const SweepSummary s1 = run_experiment(cfg);
  REQUIRE(s1.per_t.size() == 1);
  REQUIRE(s1.per_t.front().mean_regret == Approx(0.0).margin(1e-12));
  REQUIRE(s1.rows.size() == 4);

  cfg.output_dir = out2.string();
  run_experiment(cfg);
  const std::string csv1 = read_file(out1 / "t.csv");
  const std::string csv2 = read_file(out2 / "t.csv");
  REQUIRE(strip_wall_ms(csv1) == strip_wall_ms(csv2));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("sweep row counts and csv round trip", "[harness]") {
  json j = base_config();
  j["experiment"] = "sweep";
  j["experiment_id"] = "sweep_t";
  j["mechanism"] = "ucb";
  j.erase("T");
  j["horizons"] = {64, 128, 256};
  j["seeds"] = 5;
  ExperimentConfig cfg = parse_config(j);
  const fs::path out = temp_dir("c");
  cfg.output_dir = out.string();
  const SweepSummary summary = run_experiment(cfg);
  REQUIRE(summary.rows.size() == 3 * 5);

  const auto rows = read_csv(out / "sweep_t.csv");
  REQUIRE(rows.size() == summary.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].T == summary.rows[i].T);
    REQUIRE(rows[i].seed == summary.rows[i].seed);
    REQUIRE(rows[i].total_regret == summary.rows[i].total_regret);  // %.17g round-trips
  }
  REQUIRE(fs::exists(out / "sweep_t_summary.json"));
  fs::remove_all(out);
}

TEST_CASE("negative mean regret suppresses the slope and fills the sign summary", "[harness]") {
  json j{{"experiment", "sweep"},
         {"experiment_id", "neg"},
         {"mechanism", "ucb"},
         {"env", {{"ctrs", {0.9, 0.8, 0.7}}, {"values", {1.0, 0.5, 0.5}}}},
         {"horizons", {2000, 4000}},
         {"seeds", 5},
         {"master_seed", 33},
         {"output", temp_dir("neg").string()}};
  ExperimentConfig cfg = parse_config(j);
  const SweepSummary summary = run_experiment(cfg);
  REQUIRE_FALSE(summary.slope.has_value());
  for (const auto& s : summary.per_t) {
    REQUIRE(s.mean_regret < 0.0);
    REQUIRE(s.negative_fraction == 1.0);
  }
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("lower-bound experiment tags both instances and fits the pair slope", "[harness]") {
  json j{{"experiment", "lower-bound"}, {"experiment_id", "lb"},     {"mechanism", "ucb"},
         {"horizons", {256, 1024}},     {"seeds", 30},               {"master_seed", 5},
         {"output", temp_dir("d").string()}};
  ExperimentConfig cfg = parse_config(j);
  const SweepSummary summary = run_experiment(cfg);
  REQUIRE(summary.rows.size() == 2 * 2 * 30);
  REQUIRE(summary.max_pair_series.size() == 2);
  REQUIRE(summary.slope_max_pair.has_value());
  bool saw_env1 = false, saw_env2 = false;
  for (const auto& s : summary.per_t) {
    saw_env1 = saw_env1 || s.experiment_id == "lb/env1";
    saw_env2 = saw_env2 || s.experiment_id == "lb/env2";
  }
  REQUIRE(saw_env1);
  REQUIRE(saw_env2);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("report assertions evaluate against summaries", "[harness]") {
  // Synthetic rows: an exact sqrt(T) pair series.
  std::vector<RowRecord> rows;
  for (long long T : {1024, 4096, 16384}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      RowRecord r1{"x/env1", "ucb", T, seed, 0, 0, std::sqrt(double(T)), 0, -1, 0};
      RowRecord r2{"x/env2", "ucb", T, seed, 0, 0, 0.5 * std::sqrt(double(T)), 0, -1, 0};
      rows.push_back(r1);
      rows.push_back(r2);
    }
  }
  const SweepSummary summary = summarize_rows(rows);
  REQUIRE(summary.slope_max_pair.has_value());
  REQUIRE(*summary.slope_max_pair == Approx(0.5).margin(1e-9));

  json doc{{"assertions",
            {{{"type", "slope_range"}, {"series", "max_pair"}, {"min", 0.35}, {"max", 0.65}},
             {{"type", "pair_floor"}, {"base_id", "x"}, {"T", 4096}, {"floor", 1.0},
              {"se_slack", 2.0}},
             {{"type", "upper_envelope"}}}}};
  const auto results = evaluate_assertions(doc, summary);
  REQUIRE(results.size() == 3);
  for (const auto& r : results) {
    INFO(r.name << ": " << r.detail);
    REQUIRE(r.pass);
  }

  json failing{{"assertions",
                {{{"type", "slope_range"}, {"series", "max_pair"}, {"min", 0.6}, {"max", 0.65}}}}};
  REQUIRE_FALSE(evaluate_assertions(failing, summary).front().pass);
}

TEST_CASE("ic-check experiment writes its certificate", "[harness]") {
  json j{{"experiment", "ic-check"},
         {"experiment_id", "ic"},
         {"mechanism", "etc"},
         {"env", {{"ctrs", {0.9, 0.8, 0.7}}, {"values", {1.0, 0.5, 0.5}}}},
         {"T", 800},
         {"ic_states", 50},
         {"ic_coupled_seeds", 5},
         {"master_seed", 12},
         {"output", temp_dir("e").string()}};
  ExperimentConfig cfg = parse_config(j);
  const IcCheckReport report = run_ic_check(cfg);
  REQUIRE(report.stage.max_gain <= 1e-9);
  REQUIRE(report.myerson.max_abs_residual <= 1e-9);
  REQUIRE(report.global.max_delta <= 1e-9);
  REQUIRE(fs::exists(fs::path(cfg.output_dir) / "ic_ic_summary.json"));
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("parallel map is schedule independent", "[harness]") {
  auto square = [](std::size_t i) { return static_cast<double>(i * i); };
  const auto serial = parallel_map<double>(64, square, 1);
  const auto threaded = parallel_map<double>(64, square, 8);
  REQUIRE(serial == threaded);
  REQUIRE(parallel_map<double>(0, square, 4).empty());
}
