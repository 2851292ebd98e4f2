#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ppc/random.hpp"
#include "ppc/stats.hpp"

using namespace ppc;
using Catch::Approx;

TEST_CASE("ucb bonus evaluates both logarithm variants", "[stats]") {
  // log T = 2 synthetically: T = e^2. sqrt(3*2 / (2*6)) = sqrt(1/2).
  const double e2 = std::exp(2.0);
  REQUIRE(ucb_bonus(6, e2, 3, BonusVariant::PaperLiteralLogT) ==
          Approx(0.7071067811865476).epsilon(1e-12));
  // Analysis variant, n=2, T=100, N=6: sqrt(3 ln(400) / 12).
  REQUIRE(ucb_bonus(6, 100.0, 2, BonusVariant::AnalysisLog2nT) ==
          Approx(1.2238734153404083).epsilon(1e-12));
}

TEST_CASE("ucb bonus rejects zero pulls", "[stats]") {
  REQUIRE_THROWS_AS(ucb_bonus(0, 100.0, 2, BonusVariant::AnalysisLog2nT), std::domain_error);
}

TEST_CASE("ucb bonus decreases in pulls and increases in horizon", "[stats][property]") {
  for (const auto variant : {BonusVariant::AnalysisLog2nT, BonusVariant::PaperLiteralLogT}) {
    double prev = ucb_bonus(1, 1000.0, 3, variant);
    for (long long n = 2; n <= 4096; n *= 2) {
      const double b = ucb_bonus(n, 1000.0, 3, variant);
      REQUIRE(b < prev);
      prev = b;
    }
    REQUIRE(prev < 0.1);  // bonus decays toward zero
    REQUIRE(ucb_bonus(10, 1e6, 3, variant) > ucb_bonus(10, 1e3, 3, variant));
  }
}

TEST_CASE("estimator update is the running-average identity", "[stats]") {
  EstimatorState s({1}, {1.0}, 100.0, BonusVariant::AnalysisLog2nT);
  s.update(0, 0);
  REQUIRE(s.pulls(0) == 2);
  REQUIRE(s.mean(0) == Approx(0.5));

  EstimatorState t({3}, {1.0 / 3.0}, 100.0, BonusVariant::AnalysisLog2nT);
  t.update(0, 1);
  REQUIRE(t.pulls(0) == 4);
  REQUIRE(t.mean(0) == Approx(0.5));
}

TEST_CASE("folded clicks equal the batch mean", "[stats]") {
  EstimatorState s(1, 100.0, BonusVariant::AnalysisLog2nT);
  for (int c : {1, 0, 0, 1}) s.update(0, c);
  REQUIRE(s.pulls(0) == 4);
  REQUIRE(s.mean(0) == Approx(0.5).margin(1e-12));
}

TEST_CASE("fold equals batch mean on random click sequences", "[stats][property]") {
  SequenceRng rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    EstimatorState s(1, 1000.0, BonusVariant::AnalysisLog2nT);
    const int len = 1 + static_cast<int>(rng.below(300));
    long long ones = 0;
    for (int i = 0; i < len; ++i) {
      const int c = rng.below(2) == 0 ? 0 : 1;
      ones += c;
      s.update(0, c);
    }
    REQUIRE(s.mean(0) == Approx(static_cast<double>(ones) / len).margin(1e-12));
    REQUIRE(s.mean(0) >= 0.0);
    REQUIRE(s.mean(0) <= 1.0);
  }
}

TEST_CASE("ucb and lcb bracket the mean", "[stats]") {
  EstimatorState s({5, 9}, {0.4, 0.9}, 500.0, BonusVariant::AnalysisLog2nT);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(s.ucb(i) >= s.mean(i));
    REQUIRE(s.lcb(i) <= s.mean(i));
    REQUIRE(s.ucb(i) - s.mean(i) == Approx(s.mean(i) - s.lcb(i)));
  }
}

TEST_CASE("second maximum follows the duplicate rule", "[stats]") {
  const std::vector<double> dup{5.0, 5.0, 2.0};
  REQUIRE(smax(dup) == 5.0);
  REQUIRE(argsmax_index(dup) == 1);

  const std::vector<double> plain{2.0, 5.0, 3.0};
  REQUIRE(smax(plain) == 3.0);
  REQUIRE(argsmax_index(plain) == 2);

  const std::vector<double> single{7.0};
  REQUIRE_THROWS_AS(smax(single), std::invalid_argument);
}

TEST_CASE("second maximum agrees with a sort-based oracle", "[stats][property]") {
  SequenceRng rng(555);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.below(4) == 0 ? 1.0 : rng.uniform(0.0, 2.0);  // force ties
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    REQUIRE(smax(xs) == sorted[1]);
    // argsmax points at an element carrying the smax value, distinct from argmax.
    const std::size_t a = argmax_index(xs), b = argsmax_index(xs);
    REQUIRE(a != b);
    REQUIRE(xs[b] == sorted[1]);
  }
}

TEST_CASE("hoeffding tail values", "[stats]") {
  REQUIRE(hoeffding_bound(2, 0.5) == Approx(0.36787944117144233).epsilon(1e-12));
  REQUIRE(hoeffding_bound(17, 0.0) == 1.0);
  REQUIRE(hoeffding_bound(50, 0.2) == Approx(0.01831563888873418).epsilon(1e-12));
}

TEST_CASE("confidence event on synthetic snapshots", "[stats]") {
  const std::vector<double> ctrs{0.5, 0.7};
  const double T = 1000.0;
  const auto bonus = [&](long long n) { return ucb_bonus(n, T, 2, BonusVariant::AnalysisLog2nT); };

  SECTION("exact estimates satisfy the event") {
    std::vector<EstimatorSnapshot> snaps{{{0.5, 0.7}, {4, 9}}};
    const auto rep = confidence_event(snaps, ctrs, T, BonusVariant::AnalysisLog2nT);
    REQUIRE(rep.overall);
    REQUIRE(rep.per_round == std::vector<char>{1});
  }
  SECTION("a 3-bonus overshoot breaks it") {
    std::vector<EstimatorSnapshot> snaps{{{0.5 + 3.0 * bonus(4), 0.7}, {4, 9}}};
    const auto rep = confidence_event(snaps, ctrs, T, BonusVariant::AnalysisLog2nT);
    REQUIRE_FALSE(rep.overall);
  }
  SECTION("an undershoot breaks the lower side") {
    std::vector<EstimatorSnapshot> snaps{{{0.5, 0.7 - 1.5 * bonus(9)}, {4, 9}}};
    const auto rep = confidence_event(snaps, ctrs, T, BonusVariant::AnalysisLog2nT);
    REQUIRE_FALSE(rep.overall);
  }
  SECTION("missing snapshots are an error") {
    std::vector<EstimatorSnapshot> empty;
    REQUIRE_THROWS_AS(confidence_event(empty, ctrs, T, BonusVariant::AnalysisLog2nT),
                      std::invalid_argument);
  }
}

TEST_CASE("kahan summation keeps tiny terms", "[stats]") {
  KahanSum k;
  k.add(1.0);
  for (int i = 0; i < 10000000; ++i) k.add(1e-16);
  REQUIRE(k.value() == Approx(1.0 + 1e-9).epsilon(1e-12));
}
