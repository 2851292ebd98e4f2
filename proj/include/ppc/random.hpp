#pragma once

// Counter-based randomness. Every draw is a pure hash of
// (master_seed, run, ad, draw_index), so simulations replay identically no
// matter how work is scheduled across threads, and two histories that pull
// the same ad the same number of times see the same click bits.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ppc {

// SplitMix64 finalizer; full-avalanche 64-bit mixer.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Folds one tag into a derivation chain.
inline constexpr std::uint64_t derive(std::uint64_t state, std::uint64_t tag) noexcept {
  return splitmix64(state ^ splitmix64(tag));
}

// Uniform in [0, 1) from the top 53 bits.
inline constexpr double to_unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Stateless stream of uniforms for one simulated run. Draws are addressed by
// (ad, k) where k counts that ad's own draws; next_uniform advances the
// per-ad counter. Keying by pull index rather than round keeps truthful and
// deviated histories click-coupled even when deviations shift which rounds
// an ad is shown in.
class ClickStream {
 public:
  ClickStream(std::uint64_t master_seed, std::uint64_t run)
      : base_(derive(derive(splitmix64(master_seed), 0x72756e /*"run"*/), run)) {}

  double uniform_at(std::size_t ad, std::uint64_t k) const noexcept {
    return to_unit_interval(derive(derive(base_, ad), k));
  }

  double next_uniform(std::size_t ad) {
    if (ad >= counters_.size()) counters_.resize(ad + 1, 0);
    return uniform_at(ad, counters_[ad]++);
  }

  // Bernoulli(p) draw for the ad's next pull. p outside (0,1) degenerates
  // to a constant, which the tests rely on.
  int next_click(std::size_t ad, double p) { return next_uniform(ad) < p ? 1 : 0; }

  std::uint64_t draws(std::size_t ad) const {
    return ad < counters_.size() ? counters_[ad] : 0;
  }

 private:
  std::uint64_t base_;
  std::vector<std::uint64_t> counters_;
};

// Small sequential generator for test-state and harness randomization.
class SequenceRng {
 public:
  explicit SequenceRng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double next_double() { return to_unit_interval(next_u64()); }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("SequenceRng::below: bound must be positive");
    return next_u64() % bound;
  }

 private:
  std::uint64_t state_;
};

}  // namespace ppc
