#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "doctest.h"
#include "npsurv/error.hpp"
#include "npsurv/logrank.hpp"
#include "npsurv/mdir.hpp"
#include "npsurv/normal.hpp"
#include "brute_force.hpp"
#include "test_support.hpp"

using namespace npsurv;

namespace {

const std::vector<WeightSpec> kFour{WeightSpec::fh(0, 0), WeightSpec::fh(1, 0), WeightSpec::fh(0, 1),
                                    WeightSpec::fh(1, 1)};

Eigen::MatrixXd random_psd(std::uint64_t seed, int n, int rank) {
  CounterRng rng(seed, 5);
  Eigen::MatrixXd a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = normal::quantile(rng.uniform());
  return a * a.transpose();
}

}  // namespace

TEST_CASE("pseudo-inverse examples") {
  CHECK(pseudo_inverse(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  const auto p = pseudo_inverse(d);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == 0.0);
  CHECK(p(0, 1) == 0.0);
  Eigen::MatrixXd ns(2, 2);
  ns << 1, 2, 3, 4;
  CHECK_THROWS_AS(pseudo_inverse(ns), InvalidArgument);
}

TEST_CASE("pseudo-inverse satisfies the Penrose identities") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const int rank = 1 + static_cast<int>(seed % 4);
    const Eigen::MatrixXd a = random_psd(seed, 4, rank);
    const Eigen::MatrixXd g = pseudo_inverse(a);
    const double na = a.norm(), ng = g.norm();
    CHECK((a * g * a - a).norm() <= 1e-8 * na);
    CHECK((g * a * g - g).norm() <= 1e-8 * ng);
    CHECK(((a * g).transpose() - a * g).norm() <= 1e-8);
    CHECK(((g * a).transpose() - g * a).norm() <= 1e-8);
  }
}

TEST_CASE("singleton mdir reduces to the squared z statistic") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto snap = testing::random_snapshot(seed, 40, false, seed % 2 ? 0.6 : 1.6);
    const std::vector<WeightSpec> one{WeightSpec::fh(0, 1)};
    const double z = wlr_statistic(snap, one[0]).standardized;
    const auto w = mdir_statistic(snap, one);
    if (z > 0) {
      CHECK(w.statistic == doctest::Approx(z * z).epsilon(1e-10));
    } else {
      CHECK(w.statistic == 0.0);
      CHECK(w.achieving_subset.empty());
    }
  }
}

TEST_CASE("fixture mdir against numpy") {
  const auto snap = testing::fixture_snapshot();
  CHECK(mdir_statistic(snap, kFour).statistic == doctest::Approx(oracle::kFixtureMdir[0]).epsilon(1e-12));
}

TEST_CASE("mdir equals brute-force subset enumeration") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto snap = testing::random_snapshot(1000 + seed, 12 + seed % 30, seed % 4 == 0, 0.5 + (seed % 5) * 0.3);
    if (snap.group_count(0) == 0 || snap.group_count(1) == 0) continue;
    LogRankData data(snap);
    const double expect = brute::mdir(data.statistics(kFour), data.covariance(kFour));
    const double got = mdir_statistic(snap, kFour).statistic;
    CHECK(got == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("mdir over a superset dominates every sub-collection") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto snap = testing::random_snapshot(seed, 60, true, 0.7);
    const double full = mdir_statistic(snap, kFour).statistic;
    for (int mask = 1; mask < 15; ++mask) {
      std::vector<WeightSpec> sub;
      for (int l = 0; l < 4; ++l)
        if (mask & (1 << l)) sub.push_back(kFour[l]);
      CHECK(full >= mdir_statistic(snap, sub).statistic);
    }
  }
}

TEST_CASE("diagonal rescaling leaves the statistic unchanged") {
  const auto snap = testing::random_snapshot(8, 120, false, 0.6);
  LogRankData data(snap);
  const Eigen::VectorXd t = data.statistics(kFour);
  const Eigen::MatrixXd s = data.covariance(kFour);
  Eigen::VectorXd c(4);
  c << 1.0, 3.5, 0.2, 7.0;
  const Eigen::VectorXd tc = c.asDiagonal() * t;
  const Eigen::MatrixXd sc = c.asDiagonal() * s * c.asDiagonal();
  const MdirKernel k1(s), k2(sc);
  const double w1 = k1.value({t.data(), 4}), w2 = k2.value({tc.data(), 4});
  CHECK(w1 > 0);
  CHECK(w2 == doctest::Approx(w1).epsilon(1e-9));
}

TEST_CASE("bootstrap p-value equals exhaustive sign enumeration") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const std::size_t n = 4 + seed % 9;  // 4..12 subjects
    const auto snap = testing::random_snapshot(500 + seed, n, false, 0.5);
    if (snap.group_count(0) == 0 || snap.group_count(1) == 0) continue;
    const std::vector<WeightSpec> specs{WeightSpec::fh(0, 0), WeightSpec::fh(1, 0)};
    LogRankData data(snap);
    const auto cov = data.covariance(specs);
    if (cov.isZero()) continue;
    std::vector<std::vector<double>> contrib;
    for (const auto& s : specs) contrib.push_back(data.contributions(s));
    const double scale = 1.0 / std::sqrt(static_cast<double>(data.n_total()));
    const double w = brute::mdir(data.statistics(specs), cov);

    const std::size_t patterns = std::size_t{1} << n;
    std::size_t count = 0;
    for (std::size_t b = 0; b < patterns; ++b) {
      Eigen::VectorXd t = Eigen::VectorXd::Zero(2);
      for (std::size_t e = 0; e < data.events().size(); ++e) {
        const double g = (b >> data.events()[e].subject) & 1u ? 1.0 : -1.0;
        for (int l = 0; l < 2; ++l) t[l] += scale * g * contrib[l][e];
      }
      count += at_least_as_extreme(brute::mdir(t, cov), w);
    }
    const double exact = (1.0 + count) / (patterns + 1.0);

    SignSource enumerate = [](std::uint64_t b, std::span<const LogRankData::Event> events, std::span<double> signs) {
      for (std::size_t e = 0; e < events.size(); ++e) signs[e] = (b >> events[e].subject) & 1u ? 1.0 : -1.0;
    };
    const MdirBootstrap boot(snap, specs);
    const auto r = boot.p_value(patterns, enumerate);
    CHECK(r.p_value == doctest::Approx(exact).epsilon(1e-14));
    CHECK(r.bootstrap_reps == patterns);
  }
}

TEST_CASE("bootstrap edge cases and determinism") {
  const auto snap = testing::random_snapshot(4, 80, true, 1.8);  // group 1 worse: W = 0
  const auto r0 = wild_bootstrap_pvalue(snap, kFour, 50, 1);
  if (r0.statistic == 0.0) CHECK(r0.p_value == 1.0);
  CHECK_THROWS_AS(wild_bootstrap_pvalue(snap, kFour, 0, 1), InvalidArgument);

  const auto good = testing::random_snapshot(6, 200, false, 0.6);
  const auto a = wild_bootstrap_pvalue(good, kFour, 999, 123, 1);
  const auto b = wild_bootstrap_pvalue(good, kFour, 999, 123, 4);
  const auto c = wild_bootstrap_pvalue(good, kFour, 999, 124, 1);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == b.statistic);
  CHECK(a.p_value > 0.0);
  CHECK(a.p_value <= 1.0);
  CHECK(c.statistic == a.statistic);
}

TEST_CASE("singleton log-rank bootstrap agrees with the normal test") {
  const std::vector<WeightSpec> lr{WeightSpec::log_rank()};
  const double alpha = 0.05;
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto ds = testing::exponential_trial(seed, 100, 0.4, 0.4 * (0.55 + 0.01 * seed), 6.0);
    const auto snap = snapshot(ds, 8.0);
    const double z = wlr_statistic(snap, lr[0]).standardized;
    const double p_normal = normal::sf(z);
    if (z <= 0 || std::abs(p_normal - alpha) < 0.015) continue;
    const auto r = wild_bootstrap_pvalue(snap, lr, 1000, seed);
    CHECK((r.p_value <= alpha) == (p_normal <= alpha));
    ++compared;
  }
  CHECK(compared > 20);
}

TEST_CASE("bootstrap test holds its level under the null") {
  const std::vector<WeightSpec> specs{WeightSpec::fh(0, 0), WeightSpec::fh(1, 0), WeightSpec::fh(0, 1)};
  const int reps = 1000;
  const double rate = -std::log(0.7);
  int rejections = 0;
  for (int i = 0; i < reps; ++i) {
    const auto ds = testing::exponential_trial(derive_seed(31, i), 100, rate, rate, 6.0);
    rejections += wild_bootstrap_pvalue(snapshot(ds, 8.0), specs, 1000, derive_seed(32, i)).p_value <= 0.05;
  }
  const double rate_hat = static_cast<double>(rejections) / reps;
  MESSAGE("null rejection rate at 5%: " << rate_hat);
  CHECK(rate_hat >= 0.035);
  CHECK(rate_hat <= 0.065);
}
