#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "npsurv/nelder_mead.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/quadrature.hpp"
#include "npsurv/rng.hpp"
#include "oracle_values.hpp"

using namespace npsurv;

TEST_CASE("normal cdf and log cdf against scipy") {
  for (std::size_t i = 0; i < std::size(oracle::kNormalX); ++i) {
    const double x = oracle::kNormalX[i];
    CHECK(normal::cdf(x) == doctest::Approx(oracle::kNormalCdf[i]).epsilon(1e-12));
    CHECK(normal::sf(-x) == doctest::Approx(oracle::kNormalCdf[i]).epsilon(1e-12));
  }
}

TEST_CASE("log cdf deep in the lower tail") {
  const double x[] = {-40.0, -12.0, -3.0};
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(normal::log_cdf(x[i]) == doctest::Approx(oracle::kNormalLogCdf[i]).epsilon(1e-12));
}

TEST_CASE("normal quantile inverts the cdf") {
  for (std::size_t i = 0; i < std::size(oracle::kQuantileP); ++i) {
    CHECK(normal::quantile(oracle::kQuantileP[i]) == doctest::Approx(oracle::kQuantile[i]).epsilon(1e-12));
  }
  for (double p = 0.001; p < 1.0; p += 0.0137) {
    CHECK(std::abs(normal::cdf(normal::quantile(p)) - p) < 1e-14);
    CHECK(normal::upper_quantile(p) == doctest::Approx(normal::quantile(1.0 - p)).epsilon(1e-12));
  }
  CHECK(std::isinf(normal::quantile(0.0)));
  CHECK(std::isinf(normal::quantile(1.0)));
  CHECK(normal::quantile(0.5) == 0.0);
}

TEST_CASE("bivariate normal") {
  for (std::size_t i = 0; i < std::size(oracle::kBivariate); ++i) {
    const double* a = &oracle::kBivariateArgs[3 * i];
    CHECK(std::abs(normal::bivariate_cdf(a[0], a[1], a[2]) - oracle::kBivariate[i]) < 1e-7);
  }
  SUBCASE("independence factorises exactly") {
    for (double a : {-2.0, -0.3, 0.0, 1.1, 2.5})
      for (double b : {-1.5, 0.4, 3.0})
        CHECK(normal::bivariate_cdf(a, b, 0.0) == doctest::Approx(normal::cdf(a) * normal::cdf(b)).epsilon(1e-12));
  }
  SUBCASE("Monte Carlo at rho 0.6") {
    const double a = 0.3, b = -0.4, rho = 0.6;
    CounterRng rng(2024, 1);
    const int n = 1000000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const double z1 = normal::quantile(rng.uniform());
      const double z2 = rho * z1 + std::sqrt(1 - rho * rho) * normal::quantile(rng.uniform());
      hits += (z1 < a && z2 < b);
    }
    const double p = normal::bivariate_cdf(a, b, rho);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) < 3 * se);
  }
}

TEST_CASE("adaptive quadrature") {
  CHECK(integrate([](double x) { return std::exp(-x * x); }, -10, 10) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-10));
  // a kink at 1/3 is handled through the breakpoint list
  const std::vector<double> kinks{1.0 / 3.0};
  const double v = integrate([](double x) { return std::abs(x - 1.0 / 3.0); }, 0, 1, kinks,
                             QuadratureOptions{1e-13, 1e-16, 48});
  CHECK(v == doctest::Approx(5.0 / 18.0).epsilon(1e-13));
  const auto vec = integrate(
      [](double x, std::span<double> out) {
        out[0] = x;
        out[1] = std::sin(x);
      },
      2, 0, M_PI);
  CHECK(vec[0] == doctest::Approx(M_PI * M_PI / 2).epsilon(1e-10));
  CHECK(vec[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(gauss_legendre15([](double x) { return std::pow(x, 20); }, 0, 1) == doctest::Approx(1.0 / 21).epsilon(1e-13));
}

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams are reproducible and independent") {
  CounterRng a(42, 3), b(42, 3), c(42, 4);
  std::vector<double> xa, xb, xc;
  for (int i = 0; i < 10; ++i) {
    xa.push_back(a.uniform());
    xb.push_back(b.uniform());
    xc.push_back(c.uniform());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));

  CounterRng u(7, 0);
  double sum = 0, sum_exp = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = u.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
    sum += x;
    sum_exp += u.exponential();
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum_exp / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("rademacher signs agree between block and single access") {
  RademacherSigns signs(99);
  int plus = 0;
  for (std::uint64_t b = 0; b < 5; ++b) {
    const auto block = signs.block(b, 1);
    for (std::uint64_t i = 0; i < 128; ++i) {
      const int bit = (block[i / 32] >> (i % 32)) & 1u;
      const int s = signs.sign(b, 128 + i);
      CHECK(s == (bit ? 1 : -1));
      plus += s > 0;
    }
  }
  CHECK(plus > 250);
  CHECK(plus < 390);
}

TEST_CASE("nelder-mead minimises rosenbrock") {
  auto rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  NelderMeadOptions opts;
  opts.max_iterations = 5000;
  opts.f_tol = 1e-14;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, opts);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("nelder-mead respects infeasible region") {
  auto f = [](std::span<const double> x) {
    if (x[0] < 1.0) return std::numeric_limits<double>::infinity();
    return (x[0] - 0.5) * (x[0] - 0.5);
  };
  const auto r = nelder_mead(f, {2.0});
  CHECK(r.x[0] >= 1.0);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
}
