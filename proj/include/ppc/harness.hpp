#pragma once

// Experiment orchestration: JSON config in, seed-parallel sweeps over
// horizons, one CSV row per (T, seed) run, a JSON summary with per-horizon
// statistics and a log-log slope fit, and threshold assertions for reports.
//
// Reproducibility contract: the same config and master seed produce the
// same CSV bytes apart from the trailing wall_ms column, which records
// honest wall-clock time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ppc/env.hpp"
#include "ppc/ic.hpp"
#include "ppc/mechanisms.hpp"
#include "ppc/parallel.hpp"
#include "ppc/regret.hpp"

namespace ppc {

using nlohmann::json;

// Validation failure with the offending field's path, e.g. "env.ctrs[2]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class ExperimentKind { Simulate, Sweep, IcCheck, LowerBound };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  std::string experiment_id = "experiment";
  MechanismKind mechanism = MechanismKind::Ucb;

  // Environment (ignored by lower-bound experiments, which build their own).
  std::vector<double> ctrs;
  std::vector<double> values;                        // fixed schedule
  std::vector<std::vector<double>> adversarial_table;  // or per-round table
  bool require_positive_gap = false;

  std::vector<long long> horizons;
  std::size_t seeds = 1;
  std::uint64_t master_seed = 0;
  MechanismConfig mech;
  std::string output_dir = ".";
  unsigned workers = 0;

  // ic-check knobs
  std::size_t ic_states = 1000;
  std::size_t ic_grid_points = 101;
  std::size_t ic_coupled_seeds = 100;
};

namespace detail {

inline const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline long long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

inline std::vector<double> as_number_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline ExperimentKind parse_experiment_kind(const std::string& s, const std::string& path) {
  if (s == "simulate") return ExperimentKind::Simulate;
  if (s == "sweep") return ExperimentKind::Sweep;
  if (s == "ic-check") return ExperimentKind::IcCheck;
  if (s == "lower-bound") return ExperimentKind::LowerBound;
  throw ConfigError(path, "unknown experiment kind '" + s + "'");
}

inline MechanismKind parse_mechanism(const std::string& s, const std::string& path) {
  if (s == "oracle") return MechanismKind::Oracle;
  if (s == "ucb") return MechanismKind::Ucb;
  if (s == "etc") return MechanismKind::Etc;
  throw ConfigError(path, "unknown mechanism '" + s + "' (oracle|ucb|etc)");
}

inline const char* mechanism_name(MechanismKind m) {
  switch (m) {
    case MechanismKind::Oracle: return "oracle";
    case MechanismKind::Ucb: return "ucb";
    case MechanismKind::Etc: return "etc";
  }
  return "?";
}

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (const json* v = detail::find(j, "experiment")) {
    if (!v->is_string()) throw ConfigError("experiment", "expected a string");
    cfg.kind = parse_experiment_kind(v->get<std::string>(), "experiment");
  }
  if (const json* v = detail::find(j, "experiment_id")) {
    if (!v->is_string()) throw ConfigError("experiment_id", "expected a string");
    cfg.experiment_id = v->get<std::string>();
  }
  if (const json* v = detail::find(j, "mechanism")) {
    if (!v->is_string()) throw ConfigError("mechanism", "expected a string");
    cfg.mechanism = parse_mechanism(v->get<std::string>(), "mechanism");
  }

  if (const json* env = detail::find(j, "env")) {
    if (!env->is_object()) throw ConfigError("env", "expected an object");
    if (const json* v = detail::find(*env, "ctrs")) cfg.ctrs = detail::as_number_vector(*v, "env.ctrs");
    for (std::size_t i = 0; i < cfg.ctrs.size(); ++i)
      if (!(cfg.ctrs[i] > 0.0 && cfg.ctrs[i] < 1.0))
        throw ConfigError("env.ctrs[" + std::to_string(i) + "]", "must lie strictly in (0,1)");
    if (const json* v = detail::find(*env, "values"))
      cfg.values = detail::as_number_vector(*v, "env.values");
    if (const json* v = detail::find(*env, "adversarial_table")) {
      if (!v->is_array()) throw ConfigError("env.adversarial_table", "expected an array of rows");
      for (std::size_t r = 0; r < v->size(); ++r)
        cfg.adversarial_table.push_back(detail::as_number_vector(
            (*v)[r], "env.adversarial_table[" + std::to_string(r) + "]"));
    }
    if (!cfg.values.empty() && !cfg.adversarial_table.empty())
      throw ConfigError("env", "give either values or adversarial_table, not both");
    if (const json* v = detail::find(*env, "require_positive_gap")) {
      if (!v->is_boolean()) throw ConfigError("env.require_positive_gap", "expected a boolean");
      cfg.require_positive_gap = v->get<bool>();
    }
  }

  if (const json* v = detail::find(j, "horizons")) {
    if (!v->is_array() || v->empty()) throw ConfigError("horizons", "expected a nonempty array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const long long T = detail::as_integer((*v)[i], "horizons[" + std::to_string(i) + "]");
      if (T < 0) throw ConfigError("horizons[" + std::to_string(i) + "]", "must be >= 0");
      cfg.horizons.push_back(T);
    }
  }
  if (const json* v = detail::find(j, "T")) {
    cfg.horizons = {detail::as_integer(*v, "T")};
  }
  if (cfg.horizons.empty()) throw ConfigError("horizons", "required");
  if (cfg.kind == ExperimentKind::Sweep || cfg.kind == ExperimentKind::LowerBound) {
    for (std::size_t i = 1; i < cfg.horizons.size(); ++i)
      if (cfg.horizons[i] <= cfg.horizons[i - 1])
        throw ConfigError("horizons", "must be strictly increasing for a sweep");
  }

  if (const json* v = detail::find(j, "seeds")) {
    const long long s = detail::as_integer(*v, "seeds");
    if (s < 1) throw ConfigError("seeds", "must be >= 1");
    cfg.seeds = static_cast<std::size_t>(s);
  }
  if (const json* v = detail::find(j, "master_seed"))
    cfg.master_seed = static_cast<std::uint64_t>(detail::as_integer(*v, "master_seed"));

  if (const json* v = detail::find(j, "accounting")) {
    const std::string s = v->is_string() ? v->get<std::string>() : "";
    if (s == "expected") cfg.mech.accounting = Accounting::Expected;
    else if (s == "realized") cfg.mech.accounting = Accounting::Realized;
    else throw ConfigError("accounting", "expected \"expected\" or \"realized\"");
  }
  if (const json* v = detail::find(j, "bonus_variant")) {
    const std::string s = v->is_string() ? v->get<std::string>() : "";
    if (s == "log2nT") cfg.mech.bonus_variant = BonusVariant::AnalysisLog2nT;
    else if (s == "logT") cfg.mech.bonus_variant = BonusVariant::PaperLiteralLogT;
    else throw ConfigError("bonus_variant", "expected \"log2nT\" or \"logT\"");
  }
  if (const json* v = detail::find(j, "include_warmstart_in_regret")) {
    if (!v->is_boolean()) throw ConfigError("include_warmstart_in_regret", "expected a boolean");
    cfg.mech.include_warmstart_in_regret = v->get<bool>();
  }
  if (const json* v = detail::find(j, "etc_exploration_passes")) {
    if (!v->is_null()) {
      const long long p = detail::as_integer(*v, "etc_exploration_passes");
      if (p < 1) throw ConfigError("etc_exploration_passes", "must be >= 1");
      cfg.mech.etc_exploration_passes = p;
    }
  }
  if (const json* v = detail::find(j, "output")) {
    if (!v->is_string()) throw ConfigError("output", "expected a string path");
    cfg.output_dir = v->get<std::string>();
  }
  if (const json* v = detail::find(j, "workers")) {
    const long long w = detail::as_integer(*v, "workers");
    if (w < 0) throw ConfigError("workers", "must be >= 0");
    cfg.workers = static_cast<unsigned>(w);
  }
  if (const json* v = detail::find(j, "ic_states")) {
    const long long s = detail::as_integer(*v, "ic_states");
    if (s < 1) throw ConfigError("ic_states", "must be >= 1");
    cfg.ic_states = static_cast<std::size_t>(s);
  }
  if (const json* v = detail::find(j, "ic_grid_points")) {
    const long long s = detail::as_integer(*v, "ic_grid_points");
    if (s < 2) throw ConfigError("ic_grid_points", "must be >= 2");
    cfg.ic_grid_points = static_cast<std::size_t>(s);
  }
  if (const json* v = detail::find(j, "ic_coupled_seeds")) {
    const long long s = detail::as_integer(*v, "ic_coupled_seeds");
    if (s < 1) throw ConfigError("ic_coupled_seeds", "must be >= 1");
    cfg.ic_coupled_seeds = static_cast<std::size_t>(s);
  }
  return cfg;
}

// Builds the configured environment at horizon T.
inline AuctionEnv build_env(const ExperimentConfig& cfg, long long T) {
  if (cfg.ctrs.empty()) throw ConfigError("env.ctrs", "required for this experiment");
  ValuationSchedule schedule =
      !cfg.adversarial_table.empty()
          ? ValuationSchedule::adversarial(cfg.adversarial_table)
          : ValuationSchedule::fixed(cfg.values.empty() ? std::vector<double>(cfg.ctrs.size(), 1.0)
                                                        : cfg.values);
  AuctionEnv env;
  try {
    env = make_env(cfg.ctrs, std::move(schedule), T, cfg.master_seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("env", e.what());
  }
  if (cfg.require_positive_gap) {
    if (env.schedule.mode() != ValuationMode::Fixed)
      throw ConfigError("env.require_positive_gap", "gap check needs a fixed schedule");
    if (!(gap_profile(env).zeta > 0.0))
      throw ConfigError("env", "instance has zero eCPM gap but require_positive_gap is set");
  }
  return env;
}

// One CSV row. Column order is fixed; every downstream reader keys off it.
struct RowRecord {
  std::string experiment_id;
  std::string mechanism;
  long long T = 0;
  std::uint64_t seed = 0;
  double total_opt = 0.0;
  double total_revenue = 0.0;
  double total_regret = 0.0;
  long long exploration_rounds = 0;
  int clear_winner = -1;
  long long wall_ms = 0;
};

inline constexpr const char* kCsvHeader =
    "experiment_id,mechanism,T,seed,total_opt,total_revenue,total_regret,"
    "exploration_rounds,clear_winner,wall_ms";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<RowRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << kCsvHeader << "\n";
  for (const auto& r : rows) {
    out << r.experiment_id << ',' << r.mechanism << ',' << r.T << ',' << r.seed << ','
        << format_double(r.total_opt) << ',' << format_double(r.total_revenue) << ','
        << format_double(r.total_regret) << ',' << r.exploration_rounds << ',' << r.clear_winner
        << ',' << r.wall_ms << "\n";
  }
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<RowRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path.string());
  if (line != kCsvHeader) throw std::runtime_error("unexpected csv header in " + path.string());
  std::vector<RowRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    RowRecord r;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("short csv row in " + path.string());
      return field;
    };
    r.experiment_id = next();
    r.mechanism = next();
    r.T = std::stoll(next());
    r.seed = std::stoull(next());
    r.total_opt = std::stod(next());
    r.total_revenue = std::stod(next());
    r.total_regret = std::stod(next());
    r.exploration_rounds = std::stoll(next());
    r.clear_winner = std::stoi(next());
    r.wall_ms = std::stoll(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

struct PerTStats {
  std::string experiment_id;
  long long T = 0;
  std::size_t runs = 0;
  double mean_regret = 0.0;
  double se_regret = 0.0;
  double mean_revenue = 0.0;
  double se_revenue = 0.0;
  double negative_fraction = 0.0;  // fraction of seeds with regret < 0
};

struct SweepSummary {
  std::vector<RowRecord> rows;
  std::vector<PerTStats> per_t;                   // grouped by (experiment_id, T)
  std::optional<double> slope;                    // ln(mean regret) vs ln(T), single-id sweeps
  std::optional<double> slope_max_pair;           // lower-bound pairs: slope of max-over-pair
  std::vector<std::pair<long long, double>> max_pair_series;
};

// Least-squares slope of ln y against ln T. Demands at least two points,
// strictly increasing T, strictly positive y.
inline double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && !(points[i].first > points[i - 1].first))
      throw std::invalid_argument("fit_loglog_slope: T values must be strictly increasing");
    if (!(points[i].second > 0.0))
      throw std::domain_error("fit_loglog_slope: y values must be positive");
    mx += std::log(points[i].first);
    my += std::log(points[i].second);
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [t, y] : points) {
    const double dx = std::log(t) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  return sxy / sxx;
}

namespace detail {

inline PerTStats stats_for_group(const std::string& id, long long T,
                                 const std::vector<const RowRecord*>& rows) {
  PerTStats s;
  s.experiment_id = id;
  s.T = T;
  s.runs = rows.size();
  std::vector<double> regret, revenue;
  regret.reserve(rows.size());
  revenue.reserve(rows.size());
  std::size_t negative = 0;
  for (const RowRecord* r : rows) {
    regret.push_back(r->total_regret);
    revenue.push_back(r->total_revenue);
    if (r->total_regret < 0.0) ++negative;
  }
  const auto mr = mean_and_se(regret);
  const auto mv = mean_and_se(revenue);
  s.mean_regret = mr.mean;
  s.se_regret = mr.se;
  s.mean_revenue = mv.mean;
  s.se_revenue = mv.se;
  s.negative_fraction = rows.empty() ? 0.0 : static_cast<double>(negative) / rows.size();
  return s;
}

}  // namespace detail

// Groups rows by (experiment_id, T) and fits slopes where defined. For rows
// whose ids end in "/env1" and "/env2" (a lower-bound pair), also builds the
// max-over-pair regret series and its slope.
inline SweepSummary summarize_rows(std::vector<RowRecord> rows) {
  SweepSummary summary;
  std::sort(rows.begin(), rows.end(), [](const RowRecord& a, const RowRecord& b) {
    return std::tie(a.experiment_id, a.T, a.seed) < std::tie(b.experiment_id, b.T, b.seed);
  });

  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<const RowRecord*> group;
    while (j < rows.size() && rows[j].experiment_id == rows[i].experiment_id &&
           rows[j].T == rows[i].T)
      group.push_back(&rows[j++]);
    summary.per_t.push_back(detail::stats_for_group(rows[i].experiment_id, rows[i].T, group));
    i = j;
  }

  // Slope of the plain per-T means when there is a single id with all-positive means.
  bool single_id = true;
  for (std::size_t i = 1; i < summary.per_t.size(); ++i)
    if (summary.per_t[i].experiment_id != summary.per_t[0].experiment_id) single_id = false;
  if (single_id && summary.per_t.size() >= 2) {
    bool positive = true;
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : summary.per_t) {
      if (!(s.mean_regret > 0.0)) positive = false;
      pts.emplace_back(static_cast<double>(s.T), s.mean_regret);
    }
    if (positive) summary.slope = fit_loglog_slope(pts);
  }

  // Max-over-pair series for env1/env2 tagged ids.
  std::vector<std::pair<long long, std::pair<double, double>>> pair_means;  // T -> (env1, env2)
  for (const auto& s : summary.per_t) {
    const bool is1 = s.experiment_id.size() > 5 &&
                     s.experiment_id.rfind("/env1") == s.experiment_id.size() - 5;
    const bool is2 = s.experiment_id.size() > 5 &&
                     s.experiment_id.rfind("/env2") == s.experiment_id.size() - 5;
    if (!is1 && !is2) continue;
    auto it = std::find_if(pair_means.begin(), pair_means.end(),
                           [&](const auto& p) { return p.first == s.T; });
    if (it == pair_means.end()) {
      pair_means.push_back({s.T, {0.0, 0.0}});
      it = std::prev(pair_means.end());
    }
    (is1 ? it->second.first : it->second.second) = s.mean_regret;
  }
  if (!pair_means.empty()) {
    std::sort(pair_means.begin(), pair_means.end());
    for (const auto& [T, means] : pair_means)
      summary.max_pair_series.emplace_back(T, std::max(means.first, means.second));
    if (summary.max_pair_series.size() >= 2) {
      bool positive = true;
      std::vector<std::pair<double, double>> pts;
      for (const auto& [T, y] : summary.max_pair_series) {
        if (!(y > 0.0)) positive = false;
        pts.emplace_back(static_cast<double>(T), y);
      }
      if (positive) summary.slope_max_pair = fit_loglog_slope(pts);
    }
  }

  summary.rows = std::move(rows);
  return summary;
}

inline json summary_to_json(const SweepSummary& summary) {
  json per_t = json::array();
  for (const auto& s : summary.per_t) {
    per_t.push_back({{"experiment_id", s.experiment_id},
                     {"T", s.T},
                     {"runs", s.runs},
                     {"mean_regret", s.mean_regret},
                     {"se_regret", s.se_regret},
                     {"mean_revenue", s.mean_revenue},
                     {"se_revenue", s.se_revenue},
                     {"negative_fraction", s.negative_fraction}});
  }
  json out{{"per_T", per_t}};
  out["slope"] = summary.slope ? json(*summary.slope) : json(nullptr);
  if (!summary.max_pair_series.empty()) {
    json series = json::array();
    for (const auto& [T, y] : summary.max_pair_series) series.push_back({{"T", T}, {"max_mean_regret", y}});
    out["max_pair_series"] = series;
    out["slope_max_pair"] = summary.slope_max_pair ? json(*summary.slope_max_pair) : json(nullptr);
  }
  return out;
}

namespace detail {

inline RowRecord run_one(const ExperimentConfig& cfg, const std::string& id, const AuctionEnv& env,
                         std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const RunRecord run = run_mechanism(cfg.mechanism, env, cfg.mech, seed);
  const auto stop = std::chrono::steady_clock::now();
  RowRecord row;
  row.experiment_id = id;
  row.mechanism = mechanism_name(cfg.mechanism);
  row.T = env.horizon;
  row.seed = seed;
  row.total_opt = run.total_opt;
  row.total_revenue = run.total_revenue;
  row.total_regret = run.total_regret;
  row.exploration_rounds = run.exploration_rounds;
  row.clear_winner = run.clear_winner;
  row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
  return row;
}

}  // namespace detail

// Runs the (T, seed) grid for simulate/sweep/lower-bound experiments,
// persists <id>.csv and <id>_summary.json under the output directory, and
// returns the summary. Work items fan out across threads; output order is
// a sorted merge, so bytes do not depend on scheduling.
inline SweepSummary run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind == ExperimentKind::IcCheck)
    throw std::logic_error("run_experiment: ic-check has a dedicated runner");

  struct Item {
    std::string id;
    const AuctionEnv* env;
    std::uint64_t seed;
  };
  std::vector<std::pair<std::string, AuctionEnv>> envs;
  if (cfg.kind == ExperimentKind::LowerBound) {
    for (long long T : cfg.horizons) {
      LowerBoundPair pair = make_lb_pair(T, cfg.master_seed);
      envs.emplace_back(cfg.experiment_id + "/env1", std::move(pair.env_1));
      envs.emplace_back(cfg.experiment_id + "/env2", std::move(pair.env_2));
    }
  } else {
    for (long long T : cfg.horizons) envs.emplace_back(cfg.experiment_id, build_env(cfg, T));
  }

  std::vector<Item> items;
  items.reserve(envs.size() * cfg.seeds);
  for (const auto& [id, env] : envs)
    for (std::size_t s = 0; s < cfg.seeds; ++s) items.push_back({id, &env, s});

  std::vector<RowRecord> rows = parallel_map<RowRecord>(
      items.size(),
      [&](std::size_t i) { return detail::run_one(cfg, items[i].id, *items[i].env, items[i].seed); },
      cfg.workers);

  SweepSummary summary = summarize_rows(std::move(rows));

  std::filesystem::create_directories(cfg.output_dir);
  const auto base = std::filesystem::path(cfg.output_dir) / cfg.experiment_id;
  write_csv(base.string() + ".csv", summary.rows);
  std::ofstream out(base.string() + "_summary.json");
  if (!out) throw std::runtime_error("cannot open summary for writing");
  out << summary_to_json(summary).dump(2) << "\n";
  return summary;
}

// ---------------------------------------------------------------------------
// Incentive-compatibility certificates over randomized states. The same
// generators back the CLI ic-check subcommand and the acceptance suite.

struct StageIcState {
  std::size_t own_index = 0;
  double own_estimate = 1.0;
  double own_ctr = 0.5;
  std::vector<double> rival_scores;  // full score vector; own slot ignored
  double value = 1.0;
};

inline StageIcState random_stage_state(SequenceRng& rng) {
  StageIcState s;
  const std::size_t n = 2 + rng.below(4);  // 2..5 ads
  s.own_index = rng.below(n);
  s.rival_scores.resize(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == s.own_index) continue;
    // Occasional zero keeps the free-win branch exercised.
    s.rival_scores[j] = rng.below(10) == 0 ? 0.0 : rng.uniform(0.0, 1.5);
  }
  s.own_estimate = rng.uniform(0.05, 1.3);  // UCB estimates may exceed 1
  s.own_ctr = rng.uniform(0.05, 0.95);
  s.value = rng.uniform(0.05, 2.0);
  return s;
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

struct StageCertificate {
  double max_gain = -1.0;
  std::size_t states = 0;
  bool allocation_monotone = true;
};

// Deviation search over `states` random single-round states. Also verifies
// that the win indicator is nondecreasing in the own bid along each grid.
inline StageCertificate stage_ic_certificate(std::size_t states, std::size_t grid_points,
                                             std::uint64_t seed) {
  StageCertificate cert;
  cert.states = states;
  SequenceRng rng(derive(seed, 0x57a6e));
  for (std::size_t k = 0; k < states; ++k) {
    const StageIcState s = random_stage_state(rng);
    const std::vector<double> grid = uniform_grid(0.0, 2.0 * s.value, grid_points);
    const DeviationReport report =
        stage_ic_check(s.own_index, s.own_estimate, s.own_ctr, s.rival_scores, s.value, grid);
    if (report.max_gain > cert.max_gain) cert.max_gain = report.max_gain;
    const auto [rmax, rarg] = detail::rival_max(s.rival_scores, s.own_index);
    bool won_before = false;
    for (double b : grid) {
      const bool wins_now = detail::wins(s.own_estimate * b, s.own_index, rmax, rarg);
      if (won_before && !wins_now) cert.allocation_monotone = false;
      won_before = won_before || wins_now;
    }
  }
  return cert;
}

struct MyersonCertificate {
  double max_abs_residual = 0.0;
  std::size_t states = 0;
};

// Payment-identity residuals over random states; every third state places
// the probed ad's bid exactly on the win/lose threshold, alternating which
// side of the tie the ad's index falls on.
inline MyersonCertificate myerson_certificate(std::size_t states, std::uint64_t seed) {
  MyersonCertificate cert;
  cert.states = states;
  SequenceRng rng(derive(seed, 0x4d79e));
  for (std::size_t k = 0; k < states; ++k) {
    const std::size_t n = 2 + rng.below(4);
    std::vector<double> estimates(n), bids(n), ctrs(n);
    for (std::size_t i = 0; i < n; ++i) {
      estimates[i] = rng.uniform(0.05, 1.3);
      bids[i] = rng.below(12) == 0 ? 0.0 : rng.uniform(0.0, 1.5);
      ctrs[i] = rng.uniform(0.05, 0.95);
    }
    std::size_t ad = rng.below(n);
    if (k % 3 == 0) {
      // Bid exactly on the win/lose threshold. Probing ad 0 puts the tied
      // rival at a higher index (own side wins the tie); probing ad n-1
      // puts it lower (own side loses). Both orientations must be exact.
      ad = (k % 2 == 0) ? 0 : n - 1;
      std::vector<double> scores(n);
      for (std::size_t i = 0; i < n; ++i) scores[i] = estimates[i] * bids[i];
      const auto [rmax, rarg] = detail::rival_max(scores, ad);
      (void)rarg;
      bids[ad] = rmax / estimates[ad];
    }
    const double r = myerson_identity_residual(estimates, bids, ctrs, ad);
    if (std::abs(r) > cert.max_abs_residual) cert.max_abs_residual = std::abs(r);
  }
  return cert;
}

struct FamilyDelta {
  std::string name;
  double max_delta = 0.0;  // worst (largest) utility gain over the coupled seeds
};

struct GlobalIcCertificate {
  std::vector<FamilyDelta> families;
  double max_delta = 0.0;
};

// Max utility gain per scripted deviation family over coupled seeds.
inline GlobalIcCertificate global_ic_certificate(const AuctionEnv& env, MechanismKind mechanism,
                                                 const MechanismConfig& cfg, std::size_t seeds,
                                                 unsigned workers = 0) {
  GlobalIcCertificate cert;
  cert.max_delta = -std::numeric_limits<double>::infinity();
  for (const NamedDeviation& family : scripted_deviation_families(env)) {
    const std::vector<BidPolicy> policies = deviation_profile(env, family);
    const std::vector<double> deltas = parallel_map<double>(
        seeds,
        [&](std::size_t s) {
          return global_ic_check(env, policies, family.ad, mechanism, cfg, s);
        },
        workers);
    double worst = -std::numeric_limits<double>::infinity();
    for (double d : deltas) worst = std::max(worst, d);
    cert.families.push_back({family.name, worst});
    cert.max_delta = std::max(cert.max_delta, worst);
  }
  return cert;
}

struct IcCheckReport {
  StageCertificate stage;
  MyersonCertificate myerson;
  GlobalIcCertificate global;
  json to_json() const {
    json fams = json::array();
    for (const auto& f : global.families) fams.push_back({{"name", f.name}, {"max_delta", f.max_delta}});
    return json{{"stage", {{"max_gain", stage.max_gain},
                           {"states", stage.states},
                           {"allocation_monotone", stage.allocation_monotone}}},
                {"myerson", {{"max_abs_residual", myerson.max_abs_residual},
                             {"states", myerson.states}}},
                {"global", {{"families", fams}, {"max_delta", global.max_delta}}}};
  }
};

// Full ic-check experiment; persists <id>_ic_summary.json.
inline IcCheckReport run_ic_check(const ExperimentConfig& cfg) {
  IcCheckReport report;
  report.stage = stage_ic_certificate(cfg.ic_states, cfg.ic_grid_points, cfg.master_seed);
  report.myerson = myerson_certificate(cfg.ic_states, cfg.master_seed);
  const AuctionEnv env = build_env(cfg, cfg.horizons.front());
  report.global =
      global_ic_certificate(env, cfg.mechanism, cfg.mech, cfg.ic_coupled_seeds, cfg.workers);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path =
      std::filesystem::path(cfg.output_dir) / (cfg.experiment_id + "_ic_summary.json");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open ic summary for writing");
  out << report.to_json().dump(2) << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Report assertions: small, declarative thresholds evaluated over CSV rows.

struct AssertionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline const PerTStats* find_stats(const SweepSummary& s, const std::string& id, long long T) {
  for (const auto& p : s.per_t)
    if (p.experiment_id == id && p.T == T) return &p;
  return nullptr;
}

// Supported assertion objects:
//  {"type":"slope_range","series":"max_pair"|"mean","min":..,"max":..}
//  {"type":"mean_regret_per_t_max","experiment_id":..,"T":..,"max":..}
//  {"type":"pair_floor","base_id":..,"T":..,"floor":..,"se_slack":..}
//  {"type":"upper_envelope","M":(optional),"lb_pair":true}  -- checks the
//      max-over-pair series against M * sum_i sqrt(24 T ln(2nT))/ctr_i + M/T.
inline AssertionResult evaluate_assertion(const json& a, const SweepSummary& summary) {
  AssertionResult res;
  const std::string type = a.value("type", "");
  res.name = type;
  std::ostringstream detail;
  if (type == "slope_range") {
    const std::string series = a.value("series", "mean");
    std::optional<double> slope = series == "max_pair" ? summary.slope_max_pair : summary.slope;
    if (!slope) {
      res.detail = "slope undefined (nonpositive means or too few horizons)";
      return res;
    }
    res.pass = *slope >= a.value("min", 0.0) && *slope <= a.value("max", 1.0);
    detail << "slope " << *slope << " vs [" << a.value("min", 0.0) << ", " << a.value("max", 1.0)
           << "]";
  } else if (type == "mean_regret_per_t_max") {
    const auto* s = find_stats(summary, a.value("experiment_id", ""), a.value("T", 0LL));
    if (!s) {
      res.detail = "no rows for that experiment_id/T";
      return res;
    }
    const double per_round = s->mean_regret / static_cast<double>(s->T);
    res.pass = per_round <= a.value("max", 0.0);
    detail << "mean regret per round " << per_round << " vs max " << a.value("max", 0.0);
  } else if (type == "pair_floor") {
    const std::string base = a.value("base_id", "");
    const long long T = a.value("T", 0LL);
    const auto* s1 = find_stats(summary, base + "/env1", T);
    const auto* s2 = find_stats(summary, base + "/env2", T);
    if (!s1 || !s2) {
      res.detail = "missing env1/env2 rows";
      return res;
    }
    const bool first = s1->mean_regret >= s2->mean_regret;
    const double mx = first ? s1->mean_regret : s2->mean_regret;
    const double se = first ? s1->se_regret : s2->se_regret;
    const double bar = a.value("floor", 0.0) - a.value("se_slack", 0.0) * se;
    res.pass = mx >= bar;
    detail << "max-over-pair " << mx << " vs floor " << bar;
  } else if (type == "upper_envelope") {
    if (summary.max_pair_series.empty()) {
      res.detail = "no lower-bound pair series";
      return res;
    }
    res.pass = true;
    for (const auto& [T, y] : summary.max_pair_series) {
      const double Td = static_cast<double>(T);
      const double eps = 1.0 / (8.0 * std::sqrt(Td));
      const double M = a.contains("M") ? a["M"].get<double>() : 0.5 + eps / 2.0;
      const double boosted = 0.5 + eps / 2.0;
      const double logterm = std::log(2.0 * 4.0 * Td);
      const double bound =
          M * (2.0 / boosted + 2.0 / 0.5) * std::sqrt(24.0 * Td * logterm) + M / Td;
      if (y > bound) res.pass = false;
      detail << "T=" << T << ": " << y << " <= " << bound << "; ";
    }
  } else {
    res.detail = "unknown assertion type";
    return res;
  }
  res.detail = detail.str();
  return res;
}

inline std::vector<AssertionResult> evaluate_assertions(const json& doc,
                                                        const SweepSummary& summary) {
  std::vector<AssertionResult> results;
  if (!doc.contains("assertions") || !doc["assertions"].is_array())
    throw ConfigError("assertions", "expected an array");
  for (const auto& a : doc["assertions"]) results.push_back(evaluate_assertion(a, summary));
  return results;
}

}  // namespace ppc
