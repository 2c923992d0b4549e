#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "npsurv/error.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/quadrature.hpp"
#include "npsurv/rng.hpp"
#include "npsurv/spline.hpp"
#include "brute_force.hpp"
#include "test_support.hpp"

using namespace npsurv;

namespace {

std::vector<ObservedRecord> draws(std::uint64_t seed, std::size_t n, const std::function<double(double)>& inv_surv,
                                  double censor_rate) {
  CounterRng rng(seed, 3);
  std::vector<ObservedRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = inv_surv(rng.uniform());
    const double c = censor_rate > 0 ? rng.exponential() / censor_rate : kInf;
    out.push_back({i, std::min(t, c), t <= c, 0});
  }
  return out;
}

double sup_diff(const SplineModel& m, const std::function<double(double)>& surv, double lo, double hi) {
  double d = 0;
  for (int i = 0; i <= 2000; ++i) {
    const double t = lo + (hi - lo) * i / 2000.0;
    d = std::max(d, std::abs(m.survival(t) - surv(t)));
  }
  return d;
}

GroupExtrapolation with_aic(double combined, std::size_t p, SplineScale scale) {
  KnotVector k{0.0, 1.0, std::vector<double>(p, 0.5)};
  std::vector<double> phi(p + 2, 0.0);
  phi[1] = 1.0;
  // aic = 2 (p + 2) - 2 loglik, split evenly between the groups
  const double ll = (2.0 * (p + 2) - combined / 2.0) / 2.0;
  SplineModel m(scale, k, phi, ll);
  return {m, m};
}

}  // namespace

TEST_CASE("knot placement") {
  const std::vector<double> t{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto k0 = place_knots(t, 0);
  CHECK(k0.lower == 0.0);
  CHECK(k0.upper == doctest::Approx(std::log(9.0)));
  CHECK(k0.internal.empty());
  const auto k1 = place_knots(t, 1);
  REQUIRE(k1.n_internal() == 1);
  CHECK(k1.internal[0] == doctest::Approx(std::log(5.0)));
  const auto k3 = place_knots(t, 3);
  REQUIRE(k3.n_internal() == 3);
  CHECK(k3.internal[0] == doctest::Approx(std::log(3.0)));
  CHECK(k3.internal[1] == doctest::Approx(std::log(5.0)));
  CHECK(k3.internal[2] == doctest::Approx(std::log(7.0)));
  // type-7 interpolation between order statistics
  const std::vector<double> four{1, 2, 4, 8};
  CHECK(place_knots(four, 1).internal[0] == doctest::Approx(0.5 * (std::log(2.0) + std::log(4.0))));
  const std::vector<double> one{2, 2, 2};
  CHECK_THROWS_AS(place_knots(one, 0), EstimationError);
}

TEST_CASE("basis values and natural-spline linearity") {
  const KnotVector k{0.0, 2.0, {0.5, 1.2}};
  const auto b = basis(0.0, k);
  REQUIRE(b.size() == 4);
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 0.0);
  CHECK(b[2] == 0.0);
  CHECK(b[3] == 0.0);
  const auto b0 = basis(1.7, KnotVector{0.0, 2.0, {}});
  CHECK(b0 == std::vector<double>{1.0, 1.7});

  const SplineModel m(SplineScale::kHazard, k, {-0.3, 1.1, 0.4, -0.25});
  const double h = 0.25;
  for (double x : {2.3, 3.0, 5.0, 9.0, -0.3, -2.0, -6.0}) {
    const double second = (m.eta(x + h) - 2 * m.eta(x) + m.eta(x - h)) / (h * h);
    CHECK(std::abs(second) < 1e-9);
    CHECK(std::abs(m.eta_curvature(x)) < 1e-12);
  }
  std::vector<double> v(4), s(4);
  for (double x : {-1.0, 0.3, 0.9, 1.5, 2.5}) {
    basis(x, k, v, s);
    const auto up = basis(x + 1e-6, k), dn = basis(x - 1e-6, k);
    for (int j = 0; j < 4; ++j) CHECK(s[j] == doctest::Approx((up[j] - dn[j]) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("exact minimum slope") {
  const KnotVector k{0.0, 2.0, {0.5, 1.2}};
  const SplineModel m(SplineScale::kHazard, k, {-0.3, 1.1, 0.4, -0.25});
  double grid_min = 1e300;
  for (int i = -2000; i <= 6000; ++i) grid_min = std::min(grid_min, m.eta_slope(i * 0.001));
  CHECK(m.min_slope() <= grid_min + 1e-12);
  CHECK(m.min_slope() == doctest::Approx(grid_min).epsilon(1e-5));
}

TEST_CASE("closed-form survival") {
  const SplineModel unit(SplineScale::kHazard, KnotVector{0.0, 1.0, {}}, {0.0, 1.0});
  for (double t : {0.01, 0.5, 1.0, 3.0}) {
    CHECK(unit.survival(t) == doctest::Approx(std::exp(-t)).epsilon(1e-14));
    CHECK(unit.density(t) == doctest::Approx(std::exp(-t)).epsilon(1e-13));
    CHECK(unit.hazard(t) == doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK(unit.survival(1e-12) == doctest::Approx(1.0));
  const SplineModel ll(SplineScale::kOdds, KnotVector{0.0, 1.0, {}}, {-std::log(2.0) * 1.5, 1.5});
  CHECK(ll.survival(2.0) == doctest::Approx(0.5));
  const SplineModel ln(SplineScale::kNormal, KnotVector{0.0, 1.0, {}}, {-0.2 / 0.8, 1 / 0.8});
  CHECK(ln.survival(3.0) == doctest::Approx(normal::cdf(-(std::log(3.0) - 0.2) / 0.8)).epsilon(1e-13));
}

TEST_CASE("log-likelihood") {
  const double lambda = 0.4;
  auto recs = draws(1, 300, [&](double u) { return -std::log(u) / lambda; }, 0.2);
  const SplineModel m(SplineScale::kHazard, KnotVector{-1.0, 2.0, {}}, {std::log(lambda), 1.0});
  double d = 0, x = 0;
  for (const auto& r : recs) d += r.event, x += r.time;
  CHECK(log_likelihood(m, recs) == doctest::Approx(d * std::log(lambda) - lambda * x).epsilon(1e-12));

  std::vector<ObservedRecord> cens{{0, 1.0, false, 0}, {1, 2.5, false, 0}};
  CHECK(log_likelihood(m, cens) == doctest::Approx(std::log(m.survival(1.0)) + std::log(m.survival(2.5))));

  const SplineModel bad(SplineScale::kHazard, KnotVector{-1.0, 2.0, {}}, {0.0, -1.0});
  CHECK(log_likelihood(bad, recs) == -kInf);
}

TEST_CASE("hazard scale recovers a Weibull shape") {
  const double shape = 1.4, scale = 2.0;
  const auto recs = draws(2, 5000, [&](double u) { return scale * std::pow(-std::log(u), 1 / shape); }, 0.0);
  const auto m = fit_spline(recs, SplineScale::kHazard, 0);
  CHECK(m.phi()[1] == doctest::Approx(shape).epsilon(0.05));
  const auto ex = draws(3, 5000, [](double u) { return -std::log(u) / 0.7; }, 0.0);
  CHECK(fit_spline(ex, SplineScale::kHazard, 0).phi()[1] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("p=0 fits match the parametric maximum likelihood") {
  const double shape = 1.3, scale = 2.5;
  const auto recs = draws(4, 1500, [&](double u) { return scale * std::pow(-std::log(u), 1 / shape); }, 0.15);
  double hi = 0;
  for (const auto& r : recs) hi = std::max(hi, r.time);

  SUBCASE("Weibull") {
    // extreme-value error law
    const auto mle = brute::locscale_mle(recs, [](double z) { return -std::exp(z); },
                                  [](double z) { return z - std::exp(z); });
    const auto m = fit_spline(recs, SplineScale::kHazard, 0);
    CHECK(sup_diff(m, [&](double t) { return std::exp(-std::pow(t / std::exp(mle.mu), 1 / mle.sigma)); }, 0, hi) <
          1e-3);
  }
  SUBCASE("log-logistic") {
    auto log_s0 = [](double z) { return -std::log1p(std::exp(z)); };
    auto log_f0 = [](double z) { return z - 2 * std::log1p(std::exp(z)); };
    const auto mle = brute::locscale_mle(recs, log_s0, log_f0);
    const auto m = fit_spline(recs, SplineScale::kOdds, 0);
    CHECK(sup_diff(m, [&](double t) { return std::exp(log_s0((std::log(t) - mle.mu) / mle.sigma)); }, 1e-9, hi) <
          1e-3);
  }
  SUBCASE("log-normal") {
    auto log_s0 = [](double z) { return normal::log_cdf(-z); };
    auto log_f0 = [](double z) { return -0.5 * z * z - 0.5 * std::log(2 * M_PI); };
    const auto mle = brute::locscale_mle(recs, log_s0, log_f0);
    const auto m = fit_spline(recs, SplineScale::kNormal, 0);
    CHECK(sup_diff(m, [&](double t) { return normal::cdf(-(std::log(t) - mle.mu) / mle.sigma); }, 1e-9, hi) < 1e-3);
  }
}

TEST_CASE("fits are invariant to record order") {
  auto recs = draws(5, 400, [](double u) { return std::pow(-std::log(u), 0.8) * 3; }, 0.1);
  const auto a = fit_spline(recs, SplineScale::kOdds, 2);
  std::reverse(recs.begin(), recs.end());
  std::rotate(recs.begin(), recs.begin() + 123, recs.end());
  const auto b = fit_spline(recs, SplineScale::kOdds, 2);
  for (std::size_t j = 0; j < a.phi().size(); ++j) CHECK(a.phi()[j] == doctest::Approx(b.phi()[j]).epsilon(1e-10));
}

TEST_CASE("fitted models are proper survival laws") {
  const auto snap = testing::random_snapshot(9, 400, false, 0.6);
  for (const auto& e : fit_grid(snap, SplineGrid{})) {
    REQUIRE_MESSAGE(e.fit.has_value(), e.error);
    for (const SplineModel* m : {&e.fit->model0, &e.fit->model1}) {
      CHECK(m->min_slope() > 0.0);
      double hi = 0;
      for (const auto& r : snap.records) hi = std::max(hi, r.time);
      double prev = 1.0;
      for (int i = 1; i <= 1000; ++i) {
        const double t = 3 * hi * i / 1000.0;
        const double s = m->survival(t);
        CHECK(s <= prev);
        CHECK(s >= 0.0);
        CHECK(m->density(t) >= 0.0);
        CHECK(m->hazard(t) >= 0.0);
        prev = s;
      }
      std::vector<double> kinks{m->knots().lower, m->knots().upper};
      kinks.insert(kinks.end(), m->knots().internal.begin(), m->knots().internal.end());
      const double mass = integrate([&](double u) { return m->density(std::exp(u)) * std::exp(u); }, -40.0, 40.0,
                                    kinks, QuadratureOptions{1e-10, 1e-15, 48});
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("AIC and model selection") {
  const SplineModel m(SplineScale::kHazard, KnotVector{0.0, 1.0, {}}, {0.0, 1.0}, 0.0);
  CHECK(aic(m) == 4.0);

  const double table[] = {160.31, 158.65, 157.97, 162.03, 161.82, 162.03, 160.70, 161.04, 161.51};
  const SplineScale scales[] = {SplineScale::kHazard, SplineScale::kOdds, SplineScale::kNormal};
  std::vector<GroupExtrapolation> cands;
  for (int i = 0; i < 9; ++i) cands.push_back(with_aic(table[i], i / 3, scales[i % 3]));
  const auto best = select_model(cands);
  CHECK(best.combined_aic() == doctest::Approx(157.97));
  CHECK(best.n_internal() == 0);
  CHECK(best.scale() == SplineScale::kNormal);

  SUBCASE("ties prefer fewer knots then the hazard scale") {
    std::vector<GroupExtrapolation> tied{with_aic(150, 1, SplineScale::kHazard), with_aic(150, 0, SplineScale::kNormal),
                                         with_aic(150, 0, SplineScale::kOdds)};
    const auto t = select_model(tied);
    CHECK(t.n_internal() == 0);
    CHECK(t.scale() == SplineScale::kOdds);
  }
  CHECK(select_model(std::vector<GroupExtrapolation>{cands[4]}).combined_aic() == cands[4].combined_aic());
  CHECK_THROWS(select_model(std::vector<GroupExtrapolation>{}));
}

TEST_CASE("selection does not depend on the time unit") {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto snap = testing::random_snapshot(seed, 300, false, 0.5);
    auto scaled = snap;
    for (auto& r : scaled.records) r.time *= 12.0;
    const auto a = select_from_grid(fit_grid(snap, SplineGrid{}));
    const auto b = select_from_grid(fit_grid(scaled, SplineGrid{}));
    CHECK(a.n_internal() == b.n_internal());
    CHECK(a.scale() == b.scale());
    CHECK(b.combined_aic() - a.combined_aic() ==
          doctest::Approx(2 * std::log(12.0) * static_cast<double>(snap.event_count())).epsilon(1e-5));
  }
}

TEST_CASE("fit failures") {
  std::vector<ObservedRecord> few{{0, 1.0, true, 0}, {1, 2.0, false, 0}, {2, 3.0, false, 0}};
  CHECK_THROWS_AS(fit_spline(few, SplineScale::kHazard, 0), EstimationError);
  CHECK(parse_scale(to_string(SplineScale::kOdds)) == SplineScale::kOdds);
  CHECK_THROWS(parse_scale("logit"));
}
