#include "npsurv/normal.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "npsurv/quadrature.hpp"

namespace npsurv::normal {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Acklam's rational approximation, relative error ~1e-9 before refinement.
double acklam(double p) {
  static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                              -2.759285104469687e+02, 1.383577518672690e+02,
                                              -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                              -1.556989798598866e+02, 6.680131188771972e+01,
                                              -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                              -2.400758277161838e+00, -2.549732539343734e+00,
                                              4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_cdf(double x) {
  if (x > 0.0) return std::log1p(-sf(x));
  if (x > -30.0) return std::log(cdf(x));
  // Mills-ratio expansion: cdf(x) = pdf(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 ...)
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) + std::log(series);
}

double quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  double x = acklam(p);
  // One Halley step against the erfc-based cdf; the tail the root lies in
  // decides which side of the cdf is differenced to avoid cancellation.
  const double e = (x < 0.0) ? cdf(x) - p : (1.0 - p) - sf(x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double upper_quantile(double p) {
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  if (p == 1.0) return -std::numeric_limits<double>::infinity();
  if (p < 0.5) return -quantile(p);
  return quantile(1.0 - p);
}

double bivariate_cdf(double a, double b, double rho) {
  if (std::isinf(a) || std::isinf(b)) {
    if (a == -std::numeric_limits<double>::infinity() ||
        b == -std::numeric_limits<double>::infinity())
      return 0.0;
    if (std::isinf(a) && std::isinf(b)) return 1.0;
    return std::isinf(a) ? cdf(b) : cdf(a);
  }
  if (rho == 0.0) return cdf(a) * cdf(b);
  if (rho >= 1.0) return cdf(std::min(a, b));
  if (rho <= -1.0) return std::max(0.0, cdf(a) - cdf(-b));
  constexpr double lower = -38.0;
  if (a <= lower) return 0.0;
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  auto integrand = [&](double z) { return pdf(z) * cdf((b - rho * z) / s); };
  const std::array<double, 2> kinks = {0.0, b / rho};
  QuadratureOptions opts;
  opts.rel_tol = 1e-12;
  opts.abs_tol = 1e-14;
  return integrate(integrand, lower, a, kinks, opts);
}

}  // namespace npsurv::normal
