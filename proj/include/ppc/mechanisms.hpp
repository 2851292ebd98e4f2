#pragma once

// The three auctions. All score ads by estimate x bid, show the top ad and
// charge it the runner-up score divided by its own estimate, per click:
//
//   oracle  - scores with the true CTRs; the revenue benchmark.
//   ucb     - scores with upper-confidence CTR estimates that are updated
//             after every impression of the winner.
//   etc     - free round-robin exploration until one ad's LCB-scored eCPM
//             clears every rival's UCB-scored eCPM, then frozen-score
//             auctions for the rest of the horizon.

#include <cassert>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ppc/bidders.hpp"
#include "ppc/env.hpp"
#include "ppc/stats.hpp"

namespace ppc {

// Expected accounting books the winner's CTR times the price each round;
// Realized books price only on sampled clicks. Both sample the same click
// stream wherever clicks feed estimates, so the learned trajectory is
// identical across modes under one seed.
enum class Accounting { Expected, Realized };

enum class MechanismKind { Oracle, Ucb, Etc };

struct MechanismConfig {
  BonusVariant bonus_variant = BonusVariant::AnalysisLog2nT;
  Accounting accounting = Accounting::Expected;
  bool include_warmstart_in_regret = false;
  bool trace = false;
  // When set, the etc mechanism explores exactly this many round-robin
  // passes and then commits unconditionally (the unknown-values variant).
  std::optional<long long> etc_exploration_passes;
};

struct RoundOutcome {
  std::size_t winner = 0;
  std::size_t runner_up = 0;
  int click = -1;  // 0/1 when a click was sampled, -1 otherwise
  double price_per_click = 0.0;
  double expected_payment = 0.0;  // revenue booked under the accounting mode
  double opt_round = 0.0;         // second-highest true eCPM this round
  double regret_round = 0.0;      // opt_round - expected_payment
  bool exploration = false;       // free impression (etc exploration round)
};

struct RunRecord {
  std::vector<RoundOutcome> outcomes;        // populated when tracing
  std::vector<EstimatorSnapshot> snapshots;  // pre-round estimator state, when tracing
  double total_revenue = 0.0;
  double total_opt = 0.0;
  double total_regret = 0.0;
  long long horizon = 0;
  long long warmstart_rounds = 0;     // free impressions before round 1 (ucb)
  bool warmstart_in_totals = false;   // whether those were folded into opt/regret
  long long exploration_rounds = 0;   // etc: rounds consumed before commitment
  bool committed = false;             // etc: found a clear winner
  int clear_winner = -1;              // etc: committed ad, -1 if none
  std::vector<double> frozen_scores;  // etc: committed per-ad CTR scores
  std::optional<EstimatorState> final_state;
};

namespace detail {

struct ScoredRound {
  std::size_t winner;
  std::size_t runner_up;
  double runner_up_score;  // second-highest estimate*bid (duplicate rule)
  double price_per_click;
};

// Second-price core shared by all mechanisms: rank by estimate*bid, charge
// runner-up score over winner's estimate. Winner's score >= runner-up score
// implies price <= winner's bid (individual rationality), up to rounding.
inline ScoredRound score_round(std::span<const double> estimates, std::span<const double> bids) {
  if (estimates.size() < 2) throw std::invalid_argument("auction round: need at least 2 ads");
  if (estimates.size() != bids.size())
    throw std::invalid_argument("auction round: estimates/bids size mismatch");
  std::vector<double> scores(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) scores[i] = estimates[i] * bids[i];
  const std::size_t a = argmax_index(scores);
  const std::size_t b = argsmax_index(scores);
  const double price = scores[b] / estimates[a];
  assert(price <= bids[a] * (1.0 + 1e-12) + 1e-300);
  return {a, b, scores[b], price};
}

inline double second_highest_ecpm(std::span<const double> ctrs, std::span<const double> values) {
  std::vector<double> ecpm(ctrs.size());
  for (std::size_t i = 0; i < ctrs.size(); ++i) ecpm[i] = ctrs[i] * values[i];
  return smax(ecpm);
}

}  // namespace detail

// One benchmark round scored with the true CTRs. Deterministic under
// Expected accounting; Realized accounting needs the sampled click.
inline RoundOutcome oracle_spa_round(std::span<const double> ctrs, std::span<const double> bids,
                                     Accounting accounting = Accounting::Expected,
                                     std::optional<int> click = std::nullopt) {
  for (double b : bids)
    if (b < 0.0) throw std::invalid_argument("oracle_spa_round: bids must be nonnegative");
  const auto r = detail::score_round(ctrs, bids);
  RoundOutcome out;
  out.winner = r.winner;
  out.runner_up = r.runner_up;
  out.price_per_click = r.price_per_click;
  if (accounting == Accounting::Expected) {
    // ctr_winner * (runner_up_score / ctr_winner): book the exact product.
    out.expected_payment = r.runner_up_score;
    out.click = click.value_or(-1);
  } else {
    if (!click) throw std::invalid_argument("oracle_spa_round: realized accounting needs a click");
    out.click = *click;
    out.expected_payment = *click * r.price_per_click;
  }
  // Benchmark OPT under truthful bids: second-highest score equals the
  // second-highest eCPM.
  out.opt_round = r.runner_up_score;
  out.regret_round = out.opt_round - out.expected_payment;
  return out;
}

// One UCB auction round. Scores by ucb(i)*bid(i), samples the winner's click
// from its true CTR (always: the estimate update needs it), prices by the
// runner-up UCB score, and updates only the winner's estimate.
inline RoundOutcome ucb_round(EstimatorState& state, std::span<const double> bids,
                              std::span<const double> values, const AuctionEnv& env,
                              const MechanismConfig& cfg, ClickStream& stream) {
  if (!state.warm())
    throw std::logic_error("ucb_round: estimator has unpulled ads (run the warm start first)");
  std::vector<double> estimates(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) estimates[i] = state.ucb(i);
  const auto r = detail::score_round(estimates, bids);

  RoundOutcome out;
  out.winner = r.winner;
  out.runner_up = r.runner_up;
  out.price_per_click = r.price_per_click;
  out.click = sample_click(env, r.winner, stream);
  out.expected_payment = cfg.accounting == Accounting::Expected
                             ? env.ctrs[r.winner] * r.price_per_click
                             : out.click * r.price_per_click;
  out.opt_round = detail::second_highest_ecpm(env.ctrs, values);
  out.regret_round = out.opt_round - out.expected_payment;
  state.update(r.winner, out.click);
  return out;
}

// One committed-phase round with frozen scores; no estimate is updated.
inline RoundOutcome etc_frozen_round(std::span<const double> frozen_scores,
                                     std::span<const double> bids, std::span<const double> ctrs,
                                     std::span<const double> values,
                                     Accounting accounting = Accounting::Expected,
                                     std::optional<int> click = std::nullopt) {
  const auto r = detail::score_round(frozen_scores, bids);
  RoundOutcome out;
  out.winner = r.winner;
  out.runner_up = r.runner_up;
  out.price_per_click = r.price_per_click;
  if (accounting == Accounting::Expected) {
    out.expected_payment = ctrs[r.winner] * r.price_per_click;
    out.click = click.value_or(-1);
  } else {
    if (!click) throw std::invalid_argument("etc_frozen_round: realized accounting needs a click");
    out.click = *click;
    out.expected_payment = *click * r.price_per_click;
  }
  out.opt_round = detail::second_highest_ecpm(ctrs, values);
  out.regret_round = out.opt_round - out.expected_payment;
  return out;
}

// Clear-winner test: some ad's LCB-scored eCPM beats every rival's
// UCB-scored eCPM. At most one ad can qualify.
inline std::optional<std::size_t> find_clear_winner(const EstimatorState& state,
                                                    std::span<const double> values) {
  const std::size_t n = state.size();
  for (std::size_t i = 0; i < n; ++i) {
    bool clear = true;
    const double own = state.lcb(i) * values[i];
    for (std::size_t j = 0; j < n && clear; ++j)
      if (j != i && !(own > state.ucb(j) * values[j])) clear = false;
    if (clear) return i;
  }
  return std::nullopt;
}

namespace detail {

inline void record_round(RunRecord& rec, KahanSum& rev, KahanSum& opt, KahanSum& reg,
                         const RoundOutcome& out, bool trace) {
  rev.add(out.expected_payment);
  opt.add(out.opt_round);
  reg.add(out.regret_round);
  if (trace) rec.outcomes.push_back(out);
}

inline void finalize_totals(RunRecord& rec, const KahanSum& rev, const KahanSum& opt,
                            const KahanSum& reg) {
  rec.total_revenue = rev.value();
  rec.total_opt = opt.value();
  rec.total_regret = reg.value();
}

}  // namespace detail

// Full UCB auction run: one free impression per ad to seed the estimates,
// then T scored rounds. Warm-start rounds book no revenue; they enter the
// OPT/regret totals only when the config asks for it.
inline RunRecord ucb_auction_run(const AuctionEnv& env, const MechanismConfig& cfg,
                                 std::uint64_t run = 0, std::span<const BidPolicy> policies = {}) {
  if (!policies.empty() && policies.size() != env.n)
    throw std::invalid_argument("ucb_auction_run: one policy per ad required");
  ClickStream stream(env.master_seed, run);
  EstimatorState state(env.n, static_cast<double>(env.horizon), cfg.bonus_variant);

  RunRecord rec;
  rec.horizon = env.horizon;
  rec.warmstart_rounds = static_cast<long long>(env.n);
  KahanSum rev, opt, reg;

  for (std::size_t i = 0; i < env.n; ++i) state.update(i, sample_click(env, i, stream));
  if (cfg.include_warmstart_in_regret && env.horizon >= 1) {
    rec.warmstart_in_totals = true;
    const double opt1 = detail::second_highest_ecpm(env.ctrs, value_at(env, 1));
    for (std::size_t i = 0; i < env.n; ++i) {
      opt.add(opt1);
      reg.add(opt1);
    }
  }

  const bool truthful = policies.empty() || all_truthful(policies);
  for (long long t = 1; t <= env.horizon; ++t) {
    const std::vector<double>& values = value_at(env, t);
    if (cfg.trace) rec.snapshots.push_back({state.means_vector(), state.pulls_vector()});
    const std::vector<double> deviated =
        truthful ? std::vector<double>{} : bids_at(policies, values, t);
    const std::vector<double>& bids = truthful ? values : deviated;
    const RoundOutcome out = ucb_round(state, bids, values, env, cfg, stream);
    detail::record_round(rec, rev, opt, reg, out, cfg.trace);
  }
  detail::finalize_totals(rec, rev, opt, reg);
  rec.final_state = std::move(state);
  return rec;
}

// Oracle second-price run over the same horizon; the zero-regret benchmark.
inline RunRecord oracle_run(const AuctionEnv& env, const MechanismConfig& cfg,
                            std::uint64_t run = 0, std::span<const BidPolicy> policies = {}) {
  if (!policies.empty() && policies.size() != env.n)
    throw std::invalid_argument("oracle_run: one policy per ad required");
  ClickStream stream(env.master_seed, run);
  RunRecord rec;
  rec.horizon = env.horizon;
  KahanSum rev, opt, reg;
  const bool truthful = policies.empty() || all_truthful(policies);
  for (long long t = 1; t <= env.horizon; ++t) {
    const std::vector<double>& values = value_at(env, t);
    const std::vector<double> deviated =
        truthful ? std::vector<double>{} : bids_at(policies, values, t);
    const std::vector<double>& bids = truthful ? values : deviated;
    std::optional<int> click;
    std::size_t would_win = detail::score_round(env.ctrs, bids).winner;
    if (cfg.accounting == Accounting::Realized) click = sample_click(env, would_win, stream);
    RoundOutcome out = oracle_spa_round(env.ctrs, bids, cfg.accounting, click);
    if (!truthful) {
      // OPT is defined against true values regardless of what was bid.
      out.opt_round = detail::second_highest_ecpm(env.ctrs, values);
      out.regret_round = out.opt_round - out.expected_payment;
    }
    detail::record_round(rec, rev, opt, reg, out, cfg.trace);
  }
  detail::finalize_totals(rec, rev, opt, reg);
  return rec;
}

// Explore-then-commit run. Exploration shows every ad once per pass, free,
// and ends when a clear winner appears (or after the configured fixed pass
// budget). Committed rounds use the frozen scores C[winner] = lcb,
// C[rival] = ucb, with no further learning. A horizon that ends inside
// exploration leaves the record uncommitted; that is an outcome, not an
// error (gapless instances may never separate).
inline RunRecord etc_run(const AuctionEnv& env, const MechanismConfig& cfg, std::uint64_t run = 0,
                         std::span<const BidPolicy> policies = {}) {
  if (env.schedule.mode() != ValuationMode::Fixed)
    throw std::logic_error("etc_run: requires a fixed valuation schedule");
  if (!policies.empty() && policies.size() != env.n)
    throw std::invalid_argument("etc_run: one policy per ad required");
  if (cfg.etc_exploration_passes && *cfg.etc_exploration_passes < 1)
    throw std::invalid_argument("etc_run: exploration pass budget must be >= 1");

  const std::vector<double>& values = env.schedule.fixed_values();
  ClickStream stream(env.master_seed, run);
  EstimatorState state(env.n, static_cast<double>(env.horizon), cfg.bonus_variant);

  RunRecord rec;
  rec.horizon = env.horizon;
  KahanSum rev, opt, reg;
  const double opt_round = env.horizon > 0 ? detail::second_highest_ecpm(env.ctrs, values) : 0.0;

  long long rounds_used = 0;
  long long passes = 0;
  std::optional<std::size_t> winner;
  while (rounds_used < env.horizon) {
    // One exploration pass; may be cut short by the horizon.
    for (std::size_t i = 0; i < env.n && rounds_used < env.horizon; ++i) {
      if (cfg.trace) rec.snapshots.push_back({state.means_vector(), state.pulls_vector()});
      const int click = sample_click(env, i, stream);
      state.update(i, click);
      ++rounds_used;
      RoundOutcome out;
      out.winner = i;
      out.runner_up = i;
      out.click = click;
      out.opt_round = opt_round;
      out.regret_round = opt_round;
      out.exploration = true;
      detail::record_round(rec, rev, opt, reg, out, cfg.trace);
    }
    if (!state.warm()) break;  // horizon ended mid-first-pass
    ++passes;
    if (cfg.etc_exploration_passes) {
      if (passes >= *cfg.etc_exploration_passes) {
        // Fixed-budget commitment: the ad with the best LCB-scored eCPM.
        std::vector<double> lcb_scores(env.n);
        for (std::size_t i = 0; i < env.n; ++i) lcb_scores[i] = state.lcb(i) * values[i];
        winner = argmax_index(lcb_scores);
        break;
      }
    } else if ((winner = find_clear_winner(state, values))) {
      break;
    }
  }

  rec.exploration_rounds = rounds_used;
  if (winner) {
    rec.committed = true;
    rec.clear_winner = static_cast<int>(*winner);
    rec.frozen_scores.resize(env.n);
    for (std::size_t i = 0; i < env.n; ++i)
      rec.frozen_scores[i] = i == *winner ? state.lcb(i) : state.ucb(i);

    const bool truthful = policies.empty() || all_truthful(policies);
    for (long long t = rounds_used + 1; t <= env.horizon; ++t) {
      const std::vector<double> deviated =
          truthful ? std::vector<double>{} : bids_at(policies, values, t);
      const std::vector<double>& bids = truthful ? values : deviated;
      std::optional<int> click;
      if (cfg.accounting == Accounting::Realized) {
        const std::size_t shown = detail::score_round(rec.frozen_scores, bids).winner;
        click = sample_click(env, shown, stream);
      }
      const RoundOutcome out =
          etc_frozen_round(rec.frozen_scores, bids, env.ctrs, values, cfg.accounting, click);
      detail::record_round(rec, rev, opt, reg, out, cfg.trace);
    }
  }
  detail::finalize_totals(rec, rev, opt, reg);
  rec.final_state = std::move(state);
  return rec;
}

inline RunRecord run_mechanism(MechanismKind kind, const AuctionEnv& env,
                               const MechanismConfig& cfg, std::uint64_t run = 0,
                               std::span<const BidPolicy> policies = {}) {
  switch (kind) {
    case MechanismKind::Oracle: return oracle_run(env, cfg, run, policies);
    case MechanismKind::Ucb: return ucb_auction_run(env, cfg, run, policies);
    case MechanismKind::Etc: return etc_run(env, cfg, run, policies);
  }
  throw std::logic_error("run_mechanism: unknown mechanism");
}

// Coverage diagnostic over a traced run; throws if the run was not traced.
inline ConfidenceReport confidence_event_holds(const RunRecord& run, const AuctionEnv& env) {
  const BonusVariant variant =
      run.final_state ? run.final_state->variant() : BonusVariant::AnalysisLog2nT;
  return confidence_event(run.snapshots, env.ctrs, static_cast<double>(env.horizon), variant);
}

}  // namespace ppc
