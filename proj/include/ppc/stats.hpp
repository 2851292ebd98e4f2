#pragma once

// Confidence-bound arithmetic and estimator state shared by every mechanism:
// the exploration bonus in its two logarithm variants, second-maximum
// selection with the duplicate rule, the Hoeffding tail, running-average
// click estimates, and the empirical confidence-event diagnostic.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppc {

// The analysis variant uses log(2nT); the literal variant uses log(T).
// All mechanisms default to the analysis variant, which is the one the
// pull-count and coverage diagnostics are calibrated against.
enum class BonusVariant { AnalysisLog2nT, PaperLiteralLogT };

// sqrt(3 log(arg) / (2 N)) with natural log; arg is T or 2nT by variant.
inline double ucb_bonus(long long pulls, double horizon, std::size_t n, BonusVariant variant) {
  if (pulls < 1) throw std::domain_error("ucb_bonus: undefined for zero pulls (warm start required)");
  const double arg =
      variant == BonusVariant::AnalysisLog2nT ? 2.0 * static_cast<double>(n) * horizon : horizon;
  if (!(arg >= 1.0)) throw std::domain_error("ucb_bonus: log argument below 1");
  return std::sqrt(3.0 * std::log(arg) / (2.0 * static_cast<double>(pulls)));
}

// Index of the largest element; ties go to the lowest index.
inline std::size_t argmax_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_index: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

// Index of the second-largest element. Duplicates of the maximum count, so
// (5, 5, 2) has second-largest 5. Ties go to the lowest remaining index.
inline std::size_t argsmax_index(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("argsmax: need at least 2 elements");
  const std::size_t top = argmax_index(values);
  std::size_t second = top == 0 ? 1 : 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == top || i == second) continue;
    if (values[i] > values[second]) second = i;
  }
  return second;
}

inline double smax(std::span<const double> values) { return values[argsmax_index(values)]; }

// One-sided Hoeffding tail exp(-2 k t^2) for k mean-zero samples in [0,1].
inline double hoeffding_bound(long long k, double t) {
  return std::exp(-2.0 * static_cast<double>(k) * t * t);
}

// Compensated accumulator; keeps long-horizon revenue/OPT sums and
// cross-thread aggregation independent of magnitude drift.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Per-ad pull counts and empirical click means, plus the bonus parameters
// needed to turn them into UCB/LCB values. Bounds are never clipped: a UCB
// above 1 is meaningful (it is what inflates the runner-up's price).
class EstimatorState {
 public:
  EstimatorState(std::size_t n, double horizon, BonusVariant variant)
      : pulls_(n, 0), means_(n, 0.0), horizon_(horizon), variant_(variant) {}

  // Restores a state from snapshots; used by tests and diagnostics.
  EstimatorState(std::vector<long long> pulls, std::vector<double> means, double horizon,
                 BonusVariant variant)
      : pulls_(std::move(pulls)), means_(std::move(means)), horizon_(horizon), variant_(variant) {
    if (pulls_.size() != means_.size())
      throw std::invalid_argument("EstimatorState: pulls/means size mismatch");
    for (std::size_t i = 0; i < means_.size(); ++i)
      if (pulls_[i] > 0 && !(means_[i] >= 0.0 && means_[i] <= 1.0))
        throw std::invalid_argument("EstimatorState: mean outside [0,1]");
  }

  std::size_t size() const { return pulls_.size(); }
  long long pulls(std::size_t ad) const { return pulls_.at(ad); }
  double mean(std::size_t ad) const { return means_.at(ad); }
  double horizon() const { return horizon_; }
  BonusVariant variant() const { return variant_; }

  long long total_pulls() const {
    long long s = 0;
    for (long long p : pulls_) s += p;
    return s;
  }

  bool warm() const {
    for (long long p : pulls_)
      if (p < 1) return false;
    return true;
  }

  double bonus(std::size_t ad) const { return ucb_bonus(pulls(ad), horizon_, size(), variant_); }
  double ucb(std::size_t ad) const { return mean(ad) + bonus(ad); }
  double lcb(std::size_t ad) const { return mean(ad) - bonus(ad); }

  // Folds one 0/1 click into the running average of `ad` only.
  void update(std::size_t ad, int click) {
    if (ad >= pulls_.size()) throw std::out_of_range("EstimatorState::update: ad out of range");
    const long long next = ++pulls_[ad];
    means_[ad] += (static_cast<double>(click) - means_[ad]) / static_cast<double>(next);
  }

  const std::vector<long long>& pulls_vector() const { return pulls_; }
  const std::vector<double>& means_vector() const { return means_; }

 private:
  std::vector<long long> pulls_;
  std::vector<double> means_;
  double horizon_;
  BonusVariant variant_;
};

// State as it stood entering a round (the estimates that priced it).
struct EstimatorSnapshot {
  std::vector<double> means;
  std::vector<long long> pulls;
};

struct ConfidenceReport {
  std::vector<char> per_round;  // 1 where the event held in that round
  bool overall = true;
};

// Empirical check of the coverage event: for every ad and round,
// 0 <= ucb - ctr <= 2 * bonus. A diagnostic, not a proof.
inline ConfidenceReport confidence_event(std::span<const EstimatorSnapshot> snapshots,
                                         std::span<const double> ctrs, double horizon,
                                         BonusVariant variant) {
  if (snapshots.empty())
    throw std::invalid_argument("confidence_event: run has no estimator snapshots (enable tracing)");
  ConfidenceReport report;
  report.per_round.reserve(snapshots.size());
  const std::size_t n = ctrs.size();
  for (const auto& snap : snapshots) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const double b = ucb_bonus(snap.pulls[i], horizon, n, variant);
      const double dev = snap.means[i] + b - ctrs[i];
      ok = dev >= 0.0 && dev <= 2.0 * b;
    }
    report.per_round.push_back(ok ? 1 : 0);
    report.overall = report.overall && ok;
  }
  return report;
}

}  // namespace ppc
