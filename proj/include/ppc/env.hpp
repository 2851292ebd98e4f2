#pragma once

// Simulated auction world: per-ad click-through rates (fixed over time),
// a valuation schedule (static or adversarial per-round table), and the
// seed that derives all click randomness.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppc/random.hpp"

namespace ppc {

enum class ValuationMode { Fixed, Adversarial };

class ValuationSchedule {
 public:
  // Static values, identical in every round.
  static ValuationSchedule fixed(std::vector<double> values) {
    require_positive(values, "fixed values");
    ValuationSchedule s;
    s.mode_ = ValuationMode::Fixed;
    s.fixed_ = std::move(values);
    return s;
  }

  // One row of n values per round; row t-1 is served at round t.
  static ValuationSchedule adversarial(std::vector<std::vector<double>> table) {
    if (table.empty()) throw std::invalid_argument("adversarial table must have at least one row");
    const std::size_t n = table.front().size();
    for (const auto& row : table) {
      if (row.size() != n) throw std::invalid_argument("adversarial table rows must have equal length");
      require_positive(row, "adversarial table row");
    }
    ValuationSchedule s;
    s.mode_ = ValuationMode::Adversarial;
    s.table_ = std::move(table);
    return s;
  }

  ValuationMode mode() const { return mode_; }
  std::size_t width() const {
    return mode_ == ValuationMode::Fixed ? fixed_.size() : table_.front().size();
  }
  std::size_t rows() const { return table_.size(); }
  const std::vector<double>& fixed_values() const {
    if (mode_ != ValuationMode::Fixed)
      throw std::logic_error("fixed_values() on an adversarial schedule");
    return fixed_;
  }
  const std::vector<std::vector<double>>& table() const { return table_; }

 private:
  static void require_positive(const std::vector<double>& v, const char* what) {
    for (double x : v)
      if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + ": entries must be > 0");
  }

  ValuationMode mode_ = ValuationMode::Fixed;
  std::vector<double> fixed_;
  std::vector<std::vector<double>> table_;
};

struct AuctionEnv {
  std::size_t n = 0;
  std::vector<double> ctrs;  // each strictly inside (0, 1)
  ValuationSchedule schedule;
  long long horizon = 0;  // auction rounds T; 0 is allowed (degenerate run)
  std::uint64_t master_seed = 0;
};

// Validating constructor; throws std::invalid_argument on a malformed world.
inline AuctionEnv make_env(std::vector<double> ctrs, ValuationSchedule schedule,
                           long long horizon, std::uint64_t master_seed) {
  const std::size_t n = ctrs.size();
  if (n < 2) throw std::invalid_argument("env: need at least 2 ads (second price requires a runner-up)");
  for (std::size_t i = 0; i < n; ++i)
    if (!(ctrs[i] > 0.0 && ctrs[i] < 1.0))
      throw std::invalid_argument("env: ctrs[" + std::to_string(i) + "] must lie strictly in (0,1)");
  if (horizon < 0) throw std::invalid_argument("env: horizon must be >= 0");
  if (schedule.width() != n)
    throw std::invalid_argument("env: schedule width does not match number of ads");
  if (schedule.mode() == ValuationMode::Adversarial &&
      schedule.rows() != static_cast<std::size_t>(horizon))
    throw std::invalid_argument("env: adversarial table must have exactly horizon rows");
  return AuctionEnv{n, std::move(ctrs), std::move(schedule), horizon, master_seed};
}

// Values in effect at round t (1-based). Fixed schedules ignore t.
inline const std::vector<double>& value_at(const AuctionEnv& env, long long t) {
  if (t < 1 || t > env.horizon)
    throw std::out_of_range("value_at: round " + std::to_string(t) + " outside [1, " +
                            std::to_string(env.horizon) + "]");
  if (env.schedule.mode() == ValuationMode::Fixed) return env.schedule.fixed_values();
  return env.schedule.table()[static_cast<std::size_t>(t - 1)];
}

// Bernoulli(ctr) click for one impression of `ad`, consuming the ad's next
// draw from the stream.
inline int sample_click(const AuctionEnv& env, std::size_t ad, ClickStream& stream) {
  if (ad >= env.n) throw std::out_of_range("sample_click: ad index out of range");
  return stream.next_click(ad, env.ctrs[ad]);
}

// Structure of a fixed-valuation instance: true eCPMs, the top ad, the gap
// to the runner-up, and per-ad normalized gaps.
struct GapProfile {
  std::vector<double> ecpm;         // ctr_i * v_i
  std::size_t best_index = 0;       // argmax eCPM, lowest index on ties
  std::size_t runner_up_index = 0;  // argsmax eCPM, lowest index on ties
  double zeta = 0.0;                // max eCPM - second max eCPM
  std::vector<double> deltas;       // (best eCPM - eCPM_i) / v_i; 0 at best
};

inline GapProfile gap_profile(const AuctionEnv& env) {
  if (env.schedule.mode() != ValuationMode::Fixed)
    throw std::logic_error("gap_profile: defined only for fixed valuation schedules");
  const auto& v = env.schedule.fixed_values();
  GapProfile g;
  g.ecpm.resize(env.n);
  for (std::size_t i = 0; i < env.n; ++i) g.ecpm[i] = env.ctrs[i] * v[i];

  g.best_index = 0;
  for (std::size_t i = 1; i < env.n; ++i)
    if (g.ecpm[i] > g.ecpm[g.best_index]) g.best_index = i;

  bool first = true;
  for (std::size_t i = 0; i < env.n; ++i) {
    if (i == g.best_index) continue;
    if (first || g.ecpm[i] > g.ecpm[g.runner_up_index]) {
      g.runner_up_index = i;
      first = false;
    }
  }
  g.zeta = g.ecpm[g.best_index] - g.ecpm[g.runner_up_index];

  g.deltas.assign(env.n, 0.0);
  const double top = g.ecpm[g.best_index];
  for (std::size_t i = 0; i < env.n; ++i)
    if (i != g.best_index) g.deltas[i] = (top - g.ecpm[i]) / v[i];
  return g;
}

}  // namespace ppc
