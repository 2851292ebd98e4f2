#pragma once

// Mechanized incentive checks.
//
// Stage IC: with the CTR estimates frozen (they never depend on the current
// bid), a round is a second-price auction in score space. Utility as a
// function of own bid is a step: zero below the rival threshold, then
// ctr * (value - threshold-price) above it, so a bid grid that contains the
// exact breakpoint (and one ulp either side) is an exhaustive search.
//
// Global IC: truthful and deviated histories are replayed under click
// streams coupled per (ad, pull index), and the deviator's summed expected
// utility is compared. Utilities are computed in expectation; the
// definitions being checked are statements about expectations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppc/bidders.hpp"
#include "ppc/env.hpp"
#include "ppc/mechanisms.hpp"

namespace ppc {

struct DeviationReport {
  double max_gain = 0.0;          // best deviation utility minus truthful utility
  double best_deviation_bid = 0.0;
  double truthful_utility = 0.0;
  double tolerance = 1e-9;
  std::string description;
};

namespace detail {

// Highest rival score and its index; scores[own] is skipped.
inline std::pair<double, std::size_t> rival_max(std::span<const double> scores, std::size_t own) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = own == 0 ? 1 : 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == own) continue;
    if (scores[j] > best) {
      best = scores[j];
      arg = j;
    }
  }
  return {best, arg};
}

// Win predicate under the lowest-index tie rule.
inline bool wins(double own_score, std::size_t own, double rival_score, std::size_t rival_arg) {
  return own_score > rival_score || (own_score == rival_score && own < rival_arg);
}

}  // namespace detail

// Expected utility of bidding b when the own frozen estimate is
// `own_estimate`, the true click probability is `own_ctr`, and the rivals'
// frozen scores are fixed: ctr * (value - price) on a win, 0 otherwise.
inline double stage_utility(double b, std::size_t own_index, double own_estimate, double own_ctr,
                            std::span<const double> rival_scores, double value) {
  const auto [rmax, rarg] = detail::rival_max(rival_scores, own_index);
  if (!detail::wins(own_estimate * b, own_index, rmax, rarg)) return 0.0;
  return own_ctr * (value - rmax / own_estimate);
}

// Exhaustive-by-construction deviation search over the grid plus the exact
// win/lose breakpoint. For a correct mechanism max_gain <= 0.
inline DeviationReport stage_ic_check(std::size_t own_index, double own_estimate, double own_ctr,
                                      std::span<const double> rival_scores, double value,
                                      std::span<const double> grid, double tolerance = 1e-9) {
  if (grid.empty()) throw std::invalid_argument("stage_ic_check: empty bid grid");
  if (!(own_estimate > 0.0)) throw std::invalid_argument("stage_ic_check: estimate must be > 0");
  if (own_index >= rival_scores.size())
    throw std::invalid_argument("stage_ic_check: own index outside score vector");

  const auto [rmax, rarg] = detail::rival_max(rival_scores, own_index);
  auto utility = [&](double b) {
    return stage_utility(b, own_index, own_estimate, own_ctr, rival_scores, value);
  };

  std::vector<double> bids(grid.begin(), grid.end());
  const double breakpoint = rmax / own_estimate;
  if (breakpoint >= 0.0 && std::isfinite(breakpoint)) {
    bids.push_back(breakpoint);
    bids.push_back(std::nextafter(breakpoint, std::numeric_limits<double>::infinity()));
    if (breakpoint > 0.0) bids.push_back(std::nextafter(breakpoint, 0.0));
  }

  DeviationReport report;
  report.tolerance = tolerance;
  report.truthful_utility = utility(value);
  report.max_gain = -std::numeric_limits<double>::infinity();
  for (double b : bids) {
    if (b < 0.0) continue;
    const double gain = utility(b) - report.truthful_utility;
    if (gain > report.max_gain) {
      report.max_gain = gain;
      report.best_deviation_bid = b;
    }
  }
  report.description = "stage deviation over " + std::to_string(bids.size()) +
                       " bids incl. breakpoint " + std::to_string(breakpoint);
  return report;
}

// Residual of the Myerson payment identity
//   p(b) = b * x(b) - integral_0^b x(z) dz
// for one ad against frozen scores, where x(z) = ctr * [ad wins bidding z]
// is a step at threshold = rival_max / own_estimate. Zero (to rounding) for
// every bid, including exactly at the threshold under either tie
// orientation.
inline double myerson_identity_residual(std::span<const double> estimates,
                                        std::span<const double> bids, std::span<const double> ctrs,
                                        std::size_t ad) {
  if (estimates.size() != bids.size() || estimates.size() != ctrs.size())
    throw std::invalid_argument("myerson_identity_residual: size mismatch");
  if (ad >= estimates.size()) throw std::invalid_argument("myerson_identity_residual: bad ad");

  std::vector<double> scores(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) scores[i] = estimates[i] * bids[i];
  const auto [rmax, rarg] = detail::rival_max(scores, ad);
  const bool won = detail::wins(scores[ad], ad, rmax, rarg);
  const double threshold = rmax / estimates[ad];

  const double expected_payment = won ? ctrs[ad] * threshold : 0.0;
  const double alloc = won ? ctrs[ad] : 0.0;
  const double integral = bids[ad] > threshold ? ctrs[ad] * (bids[ad] - threshold) : 0.0;
  return expected_payment - (bids[ad] * alloc - integral);
}

// Summed expected utility of `ad` over a traced run: free impressions are
// worth ctr * value, won auction rounds ctr * (value - price), lost rounds 0.
inline double total_expected_utility(const RunRecord& run, const AuctionEnv& env, std::size_t ad) {
  if (run.outcomes.empty() && run.horizon > 0)
    throw std::logic_error("total_expected_utility: run was not traced");
  double u = 0.0;
  long long t = 0;
  for (const auto& out : run.outcomes) {
    ++t;
    if (out.winner != ad) continue;
    const double value = value_at(env, t)[ad];
    u += out.exploration ? env.ctrs[ad] * value
                         : env.ctrs[ad] * (value - out.price_per_click);
  }
  return u;
}

// Utility delta of the deviating ad between the deviated and the truthful
// history, both replayed under the same (ad, pull-index)-coupled clicks.
// Nonpositive (to rounding) for a global-IC mechanism.
inline double global_ic_check(const AuctionEnv& env, std::span<const BidPolicy> policies,
                              std::size_t deviating_ad, MechanismKind mechanism,
                              const MechanismConfig& cfg, std::uint64_t run_index) {
  if (policies.size() != env.n)
    throw std::invalid_argument("global_ic_check: one policy per ad required");
  if (deviating_ad >= env.n) throw std::invalid_argument("global_ic_check: bad deviating ad");
  MechanismConfig traced = cfg;
  traced.trace = true;

  const std::vector<BidPolicy> truthful(env.n, BidPolicy::truthful());
  const RunRecord base = run_mechanism(mechanism, env, traced, run_index, truthful);
  const RunRecord dev = run_mechanism(mechanism, env, traced, run_index, policies);
  return total_expected_utility(dev, env, deviating_ad) -
         total_expected_utility(base, env, deviating_ad);
}

// The scripted deviation families exercised by the global-IC certificate.
struct NamedDeviation {
  std::string name;
  std::size_t ad;
  BidPolicy policy;
};

// Families target the true runner-up (most tempted to manipulate) and the
// best ad, across both phases of the horizon.
inline std::vector<NamedDeviation> scripted_deviation_families(const AuctionEnv& env) {
  const GapProfile gap = gap_profile(env);
  const std::size_t best = gap.best_index;
  const std::size_t runner = gap.runner_up_index;
  const long long T = env.horizon;
  std::vector<NamedDeviation> families;
  families.push_back({"truthful_control", runner, BidPolicy::truthful()});
  families.push_back({"runner_up_overbid_1.5x", runner, BidPolicy::scaled(1.5)});
  families.push_back({"runner_up_underbid_0.5x", runner, BidPolicy::scaled(0.5)});
  families.push_back({"best_underbid_0.8x", best, BidPolicy::scaled(0.8)});
  families.push_back({"best_overbid_2x", best, BidPolicy::scaled(2.0)});
  if (T >= 2)
    families.push_back(
        {"runner_up_early_zero", runner, BidPolicy::fixed_deviation(1, std::max<long long>(1, T / 100), 0.0)});
  if (T >= 2)
    families.push_back({"runner_up_zero_then_truthful", runner,
                        BidPolicy::zero_then_truthful(std::max<long long>(2, T / 2))});
  return families;
}

inline std::vector<BidPolicy> deviation_profile(const AuctionEnv& env, const NamedDeviation& d) {
  std::vector<BidPolicy> policies(env.n, BidPolicy::truthful());
  policies[d.ad] = d.policy;
  return policies;
}

}  // namespace ppc
