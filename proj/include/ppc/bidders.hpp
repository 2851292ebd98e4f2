#pragma once

// Bidding policies. Truthful is the equilibrium behavior the mechanisms are
// designed for; the scripted deviations exist so the incentive checks have
// something concrete to test against.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ppc {

struct BidPolicy {
  enum class Kind { Truthful, ScaledBid, FixedDeviation, ZeroThenTruthful };

  Kind kind = Kind::Truthful;
  double factor = 1.0;        // ScaledBid multiplier, > 0
  long long from_round = 0;   // FixedDeviation range [from, to], 1-based inclusive
  long long to_round = 0;
  double fixed_bid = 0.0;     // FixedDeviation replacement bid, >= 0
  long long switch_round = 0; // ZeroThenTruthful: bid 0 for t < switch_round

  static BidPolicy truthful() { return {}; }

  static BidPolicy scaled(double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("ScaledBid: factor must be > 0");
    BidPolicy p;
    p.kind = Kind::ScaledBid;
    p.factor = factor;
    return p;
  }

  static BidPolicy fixed_deviation(long long from, long long to, double bid) {
    if (from < 1 || to < from) throw std::invalid_argument("FixedDeviation: bad round range");
    if (bid < 0.0) throw std::invalid_argument("FixedDeviation: bids must be nonnegative");
    BidPolicy p;
    p.kind = Kind::FixedDeviation;
    p.from_round = from;
    p.to_round = to;
    p.fixed_bid = bid;
    return p;
  }

  static BidPolicy zero_then_truthful(long long switch_round) {
    if (switch_round < 1) throw std::invalid_argument("ZeroThenTruthful: switch round must be >= 1");
    BidPolicy p;
    p.kind = Kind::ZeroThenTruthful;
    p.switch_round = switch_round;
    return p;
  }

  double bid(double value, long long t) const {
    switch (kind) {
      case Kind::Truthful: return value;
      case Kind::ScaledBid: return factor * value;
      case Kind::FixedDeviation: return (t >= from_round && t <= to_round) ? fixed_bid : value;
      case Kind::ZeroThenTruthful: return t < switch_round ? 0.0 : value;
    }
    return value;
  }

  bool is_truthful() const { return kind == Kind::Truthful; }
};

inline bool all_truthful(std::span<const BidPolicy> policies) {
  for (const auto& p : policies)
    if (!p.is_truthful()) return false;
  return true;
}

// Bids for round t. cap_at_value clamps every bid to the bidder's value
// (no-overbidding regime); off by default.
inline std::vector<double> bids_at(std::span<const BidPolicy> policies,
                                   std::span<const double> values, long long t,
                                   bool cap_at_value = false) {
  if (policies.size() != values.size())
    throw std::invalid_argument("bids_at: one policy per ad required");
  std::vector<double> bids(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double b = policies[i].bid(values[i], t);
    if (cap_at_value && b > values[i]) b = values[i];
    bids[i] = b < 0.0 ? 0.0 : b;
  }
  return bids;
}

}  // namespace ppc
