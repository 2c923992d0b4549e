#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace npsurv {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-15;
  int max_depth = 48;
};

/// Adaptive 15-point Gauss-Legendre quadrature of a vector-valued integrand on
/// [a, b]. Each panel is compared against its two halves and bisected until the
/// difference is within tolerance. `breakpoints` (kinks of the integrand) are
/// always panel boundaries; points outside (a, b) are ignored.
///
/// `f(x, out)` writes `dim` values into `out`. Throws NumericalError when the
/// depth limit is hit.
using VectorIntegrand = std::function<void(double, std::span<double>)>;

std::vector<double> integrate(const VectorIntegrand& f, std::size_t dim, double a,
                              double b, std::span<const double> breakpoints = {},
                              const QuadratureOptions& opts = {});

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints = {},
                 const QuadratureOptions& opts = {});

/// Fixed 15-point Gauss-Legendre rule on [a, b].
double gauss_legendre15(const std::function<double(double)>& f, double a, double b);

}  // namespace npsurv
