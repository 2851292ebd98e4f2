#pragma once

// Regret accounting against the known-CTR second-price benchmark, the
// minimax instance pair with a horizon-tuned gap, and the Monte Carlo
// probe that measures a mechanism against both instances.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ppc/env.hpp"
#include "ppc/mechanisms.hpp"
#include "ppc/parallel.hpp"
#include "ppc/stats.hpp"

namespace ppc {

struct OptBenchmark {
  std::vector<double> per_round;
  double total = 0.0;
};

// Per-round second-highest true eCPM under the schedule, and its sum.
inline OptBenchmark opt_benchmark(const AuctionEnv& env) {
  OptBenchmark bench;
  bench.per_round.reserve(static_cast<std::size_t>(env.horizon));
  KahanSum total;
  std::vector<double> ecpm(env.n);
  for (long long t = 1; t <= env.horizon; ++t) {
    const auto& v = value_at(env, t);
    for (std::size_t i = 0; i < env.n; ++i) ecpm[i] = env.ctrs[i] * v[i];
    const double o = smax(ecpm);
    bench.per_round.push_back(o);
    total.add(o);
  }
  bench.total = total.value();
  return bench;
}

inline double opt_total(const AuctionEnv& env) {
  KahanSum total;
  std::vector<double> ecpm(env.n);
  for (long long t = 1; t <= env.horizon; ++t) {
    const auto& v = value_at(env, t);
    for (std::size_t i = 0; i < env.n; ++i) ecpm[i] = env.ctrs[i] * v[i];
    total.add(smax(ecpm));
  }
  return total.value();
}

// Benchmark total minus realized revenue, recomputing OPT independently of
// the run's own bookkeeping. Honors the run's warm-start accounting choice.
inline double compute_regret(const RunRecord& run, const AuctionEnv& env) {
  if (run.horizon != env.horizon)
    throw std::invalid_argument("compute_regret: run and env horizons differ");
  KahanSum total;
  std::vector<double> ecpm(env.n);
  if (run.warmstart_in_totals && env.horizon >= 1) {
    const auto& v1 = value_at(env, 1);
    for (std::size_t i = 0; i < env.n; ++i) ecpm[i] = env.ctrs[i] * v1[i];
    const double o1 = smax(ecpm);
    for (long long i = 0; i < run.warmstart_rounds; ++i) total.add(o1);
  }
  for (long long t = 1; t <= env.horizon; ++t) {
    const auto& v = value_at(env, t);
    for (std::size_t i = 0; i < env.n; ++i) ecpm[i] = env.ctrs[i] * v[i];
    total.add(smax(ecpm));
  }
  return total.value() - run.total_revenue;
}

// Two four-ad unit-value instances that differ only in which pair of ads
// carries a +eps/2 CTR boost, with eps = 1/(8 sqrt(T)). No mechanism that
// never charges above the clicked value can do well on both.
struct LowerBoundPair {
  long long horizon = 0;
  double epsilon = 0.0;
  AuctionEnv env_1;
  AuctionEnv env_2;
};

inline LowerBoundPair make_lb_pair(long long T, std::uint64_t master_seed = 0) {
  if (T < 1) throw std::invalid_argument("make_lb_pair: horizon must be >= 1");
  const double eps = 1.0 / (8.0 * std::sqrt(static_cast<double>(T)));
  const double boosted = 0.5 + eps / 2.0;
  const std::vector<double> unit_values(4, 1.0);
  LowerBoundPair pair;
  pair.horizon = T;
  pair.epsilon = eps;
  pair.env_1 = make_env({boosted, boosted, 0.5, 0.5}, ValuationSchedule::fixed(unit_values), T,
                        master_seed);
  pair.env_2 = make_env({0.5, 0.5, boosted, boosted}, ValuationSchedule::fixed(unit_values), T,
                        master_seed);
  return pair;
}

struct ProbeResult {
  double mean_regret_env1 = 0.0;
  double mean_regret_env2 = 0.0;
  double max_mean = 0.0;
  double se_env1 = 0.0;
  double se_env2 = 0.0;
};

namespace detail {

struct MeanSe {
  double mean;
  double se;
};

inline MeanSe mean_and_se(const std::vector<double>& xs) {
  KahanSum sum;
  for (double x : xs) sum.add(x);
  const double mean = sum.value() / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  KahanSum sq;
  for (double x : xs) sq.add((x - mean) * (x - mean));
  const double var = sq.value() / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace detail

// Mean regret of a mechanism on both instances of the pair over seeded runs
// 0..seeds-1, with standard errors. Thresholds live with the caller.
inline ProbeResult minimax_regret_probe(MechanismKind mechanism, const LowerBoundPair& pair,
                                        std::size_t seeds, const MechanismConfig& cfg,
                                        unsigned workers = 0) {
  if (seeds == 0) throw std::invalid_argument("minimax_regret_probe: seeds must be >= 1");
  auto regret_on = [&](const AuctionEnv& env) {
    return parallel_map<double>(
        seeds,
        [&](std::size_t s) {
          const RunRecord run = run_mechanism(mechanism, env, cfg, s);
          return compute_regret(run, env);
        },
        workers);
  };
  const auto r1 = detail::mean_and_se(regret_on(pair.env_1));
  const auto r2 = detail::mean_and_se(regret_on(pair.env_2));
  ProbeResult out;
  out.mean_regret_env1 = r1.mean;
  out.se_env1 = r1.se;
  out.mean_regret_env2 = r2.mean;
  out.se_env2 = r2.se;
  out.max_mean = r1.mean > r2.mean ? r1.mean : r2.mean;
  return out;
}

}  // namespace ppc
