#include <cmath>

#include "doctest.h"
#include "npsurv/design.hpp"
#include "npsurv/error.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/rng.hpp"
#include "oracle_values.hpp"

using namespace npsurv;

namespace {

// Largest u with combine(p1, u) <= c, found by bisection on the
// combination function alone.
double bisect_error(const TwoStageDesign& d, double p1) {
  double lo = 0.0, hi = 1.0;
  if (combine(d.combination, p1, hi) <= d.c) return 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (combine(d.combination, p1, mid) <= d.c ? lo : hi) = mid;
  }
  return lo;
}

TwoStageDesign obf025() { return make_design(0.025, BoundType::kObf, Combination::equal_weights(), 5, 8); }

}  // namespace

TEST_CASE("combination functions") {
  const auto inv = Combination::equal_weights();
  CHECK(combine(inv, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(combine(Combination::fisher(), 0.1, 0.2) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(combine(inv, 0.05, 0.05) == doctest::Approx(1 - normal::cdf(2 * 1.6448536269514722 / std::sqrt(2.0))).epsilon(1e-10));
  CHECK(combine(inv, 0.05, 0.05) == doctest::Approx(0.01001).epsilon(1e-3));
  CHECK(std::isfinite(combine(inv, 0.0, 1.0)));

  CounterRng rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(), b = rng.uniform(), d = rng.uniform() * 0.1;
    for (const auto& c : {inv, Combination::fisher(), Combination::inverse_normal(0.6, 0.8)}) {
      CHECK(combine(c, a, b) <= combine(c, std::min(1.0, a + d), b));
      CHECK(combine(c, a, b) <= combine(c, a, std::min(1.0, b + d)));
    }
  }
  CHECK_THROWS_AS(Combination::inverse_normal(0.5, 0.5), InvalidArgument);
}

TEST_CASE("O'Brien-Fleming bounds at 2.5%") {
  const auto b = obf_bounds(0.025, std::sqrt(0.5), std::sqrt(0.5));
  CHECK(std::abs(b.alpha1 - 0.002583) < 1e-4);
  CHECK(std::abs(b.c - 0.023996) < 1e-4);
  // b1 = sqrt(2) b2 with equal information
  CHECK(normal::upper_quantile(b.alpha1) ==
        doctest::Approx(std::sqrt(2.0) * normal::upper_quantile(b.c)).epsilon(1e-12));
}

TEST_CASE("Pocock bounds at 2.5%") {
  const auto b = pocock_bounds(0.025, std::sqrt(0.5), std::sqrt(0.5));
  CHECK(b.alpha1 == doctest::Approx(b.c).epsilon(1e-14));
  CHECK(b.alpha1 == doctest::Approx(oracle::kPocock025[0]).epsilon(1e-7));
}

TEST_CASE("level equation holds for the standard designs") {
  for (double alpha : {0.01, 0.025, 0.05}) {
    for (auto type : {BoundType::kObf, BoundType::kPocock}) {
      const auto d = make_design(alpha, type, Combination::equal_weights(), 5, 8);
      CHECK(std::abs(level_check(d) - alpha) < 1e-6);
      CHECK(std::abs(two_stage_rejection(normal::upper_quantile(d.alpha1), normal::upper_quantile(d.c),
                                         d.combination.w1, d.combination.w2) -
                     alpha) < 1e-9);
    }
    const auto uneq = make_design(alpha, BoundType::kObf, Combination::inverse_normal(0.6, 0.8), 5, 8);
    CHECK(std::abs(level_check(uneq) - alpha) < 1e-6);
  }
}

TEST_CASE("degenerate and closed-form level cases") {
  auto d = obf025();
  d.c = 0.0;
  CHECK(level_check(d) == doctest::Approx(d.alpha1).epsilon(1e-12));

  // Fisher with c <= alpha0 * ... : alpha1 + c (ln alpha0 - ln alpha1)
  TwoStageDesign f;
  f.combination = Combination::fisher();
  f.alpha1 = 0.01;
  f.alpha0 = 0.5;
  f.c = 0.0038;
  f.alpha = 0.025;
  const double closed = f.alpha1 + f.c * (std::log(f.alpha0) - std::log(f.alpha1));
  CHECK(level_check(f) == doctest::Approx(closed).epsilon(1e-10));

  // with w2 = 0 the second stage cannot reject on its own merits
  const auto single = obf_bounds(0.025, 1.0, 0.0);
  CHECK(single.alpha1 == doctest::Approx(0.025).epsilon(1e-8));
}

TEST_CASE("conditional error") {
  const auto d = obf025();
  CHECK(conditional_error(d, 0.133) == doctest::Approx(bisect_error(d, 0.133)).epsilon(1e-10));
  // numerator zero gives one half; under OBF that point is the interim bound itself
  TwoStageDesign loose = d;
  loose.bound_type = BoundType::kExplicit;
  loose.alpha1 = 1e-4;
  loose.c = 0.02;
  const double z = normal::upper_quantile(loose.c) / loose.combination.w1;
  CHECK(conditional_error(loose, normal::sf(z)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal::sf(normal::upper_quantile(d.c) / d.combination.w1) == doctest::Approx(d.alpha1).epsilon(1e-10));

  CounterRng rng(2, 0);
  double prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double p1 = d.alpha1 + (1 - d.alpha1) * rng.uniform();
    const double e = conditional_error(d, p1);
    CHECK(std::abs(e - bisect_error(d, p1)) < 1e-10);
    if (e > 1e-12 && e < 1 - 1e-12) CHECK(combine(d.combination, p1, e) == doctest::Approx(d.c).epsilon(1e-10));
  }
  for (double p1 = 0.003; p1 < 1; p1 += 0.01) {
    const double e = conditional_error(d, p1);
    CHECK(e <= prev);
    prev = e;
  }
  TwoStageDesign f = d;
  f.combination = Combination::fisher();
  f.c = 0.0038;
  f.alpha1 = 0.01;
  CHECK(conditional_error(f, 0.2) == doctest::Approx(0.0038 / 0.2));
  CHECK(conditional_error(f, 0.2) == doctest::Approx(bisect_error(f, 0.2)).epsilon(1e-10));
  CHECK_THROWS_AS(conditional_error(d, d.alpha1 / 2), InvalidArgument);
}

TEST_CASE("decisions") {
  auto d = obf025();
  CHECK(decide(d, d.alpha1) == StageDecision::kRejectAtInterim);
  CHECK(decide(d, 0.5) == StageDecision::kContinue);
  CHECK(decide(d, 0.9) == StageDecision::kContinue);
  CHECK(decide(d, 0.5, 1e-9) == StageDecision::kRejectAtFinal);
  CHECK(decide(d, 0.5, 0.5) == StageDecision::kAcceptAtFinal);
  d.alpha0 = 0.5;
  CHECK(decide(d, 0.9) == StageDecision::kFutilityStop);
  CHECK(decide(d, 0.5) == StageDecision::kFutilityStop);
  CHECK(rejects(StageDecision::kRejectAtFinal));
  CHECK_FALSE(rejects(StageDecision::kFutilityStop));
  for (auto s : {StageDecision::kRejectAtInterim, StageDecision::kFutilityStop, StageDecision::kContinue,
                 StageDecision::kRejectAtFinal, StageDecision::kAcceptAtFinal})
    CHECK(parse_decision(to_string(s)) == s);
}

TEST_CASE("design validation") {
  auto d = obf025();
  CHECK_NOTHROW(d.validate());
  d.alpha1 = 0.5;
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  d = obf025();
  d.t2 = d.t1;
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  CHECK(parse_bound_type("pocock") == BoundType::kPocock);
  CHECK_THROWS(parse_bound_type("haybittle"));
}
