#include "npsurv/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "npsurv/error.hpp"

namespace npsurv {

namespace {

// Non-negative half of the symmetric 15-point Gauss-Legendre rule.
constexpr std::array<std::array<double, 2>, 8> kGL15 = {{
    {0.0, 0.2025782419255609},
    {0.20119409399743451, 0.19843148532711125},
    {0.39415134707756339, 0.18616100001556188},
    {0.57097217260853883, 0.16626920581699378},
    {0.72441773136017007, 0.13957067792615391},
    {0.84820658341042721, 0.10715922046717177},
    {0.93727339240070595, 0.070366047488108069},
    {0.98799251802048538, 0.030753241996118647},
}};

class Integrator {
 public:
  Integrator(const VectorIntegrand& f, std::size_t dim, const QuadratureOptions& opts)
      : f_(f), dim_(dim), opts_(opts), scratch_(dim) {}

  // Adds the panel's rule to `out` (and |f| mass to `abs_out` if given).
  void rule(double a, double b, std::span<double> out, double* abs_out = nullptr) {
    std::fill(out.begin(), out.end(), 0.0);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t k = 0; k < kGL15.size(); ++k) {
      const double dx = half * kGL15[k][0];
      const double w = half * kGL15[k][1];
      const int n_pts = (k == 0) ? 1 : 2;
      for (int side = 0; side < n_pts; ++side) {
        const double x = side == 0 ? mid + dx : mid - dx;
        f_(x, scratch_);
        for (std::size_t j = 0; j < dim_; ++j) {
          out[j] += w * scratch_[j];
          if (abs_out) abs_out[j] += w * std::abs(scratch_[j]);
        }
      }
    }
  }

  void refine(double a, double b, std::span<const double> whole, std::span<const double> tol,
              std::span<double> acc, int depth) {
    const double mid = 0.5 * (a + b);
    std::vector<double> left(dim_), right(dim_);
    rule(a, mid, left);
    rule(mid, b, right);
    bool ok = true;
    for (std::size_t j = 0; j < dim_ && ok; ++j) {
      if (!std::isfinite(left[j]) || !std::isfinite(right[j])) {
        throw NumericalError("quadrature: non-finite integrand value");
      }
      ok = std::abs(whole[j] - (left[j] + right[j])) <= tol[j];
    }
    if (ok) {
      for (std::size_t j = 0; j < dim_; ++j) acc[j] += left[j] + right[j];
      return;
    }
    if (depth >= opts_.max_depth) {
      throw NumericalError("quadrature: depth limit reached without convergence");
    }
    std::vector<double> half_tol(tol.begin(), tol.end());
    for (double& t : half_tol) t *= 0.5;
    refine(a, mid, left, half_tol, acc, depth + 1);
    refine(mid, b, right, half_tol, acc, depth + 1);
  }

 private:
  const VectorIntegrand& f_;
  std::size_t dim_;
  QuadratureOptions opts_;
  std::vector<double> scratch_;
};

}  // namespace

std::vector<double> integrate(const VectorIntegrand& f, std::size_t dim, double a, double b,
                              std::span<const double> breakpoints,
                              const QuadratureOptions& opts) {
  std::vector<double> result(dim, 0.0);
  if (!(b > a)) {
    if (a == b) return result;
    auto r = integrate(f, dim, b, a, breakpoints, opts);
    for (double& v : r) v = -v;
    return r;
  }
  std::vector<double> edges{a};
  for (double p : breakpoints) {
    if (p > a && p < b) edges.push_back(p);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Integrator integ(f, dim, opts);
  const std::size_t n_panels = edges.size() - 1;
  std::vector<std::vector<double>> panel(n_panels, std::vector<double>(dim));
  std::vector<double> scale(dim, 0.0);
  for (std::size_t k = 0; k < n_panels; ++k) {
    integ.rule(edges[k], edges[k + 1], panel[k], scale.data());
  }
  const double length = b - a;
  for (std::size_t k = 0; k < n_panels; ++k) {
    const double frac = (edges[k + 1] - edges[k]) / length;
    std::vector<double> tol(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      tol[j] = frac * std::max(opts.abs_tol, opts.rel_tol * scale[j]);
    }
    integ.refine(edges[k], edges[k + 1], panel[k], tol, result, 0);
  }
  return result;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, const QuadratureOptions& opts) {
  VectorIntegrand vf = [&f](double x, std::span<double> out) { out[0] = f(x); };
  return integrate(vf, 1, a, b, breakpoints, opts)[0];
}

double gauss_legendre15(const std::function<double(double)>& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = kGL15[0][1] * f(mid);
  for (std::size_t k = 1; k < kGL15.size(); ++k) {
    const double dx = half * kGL15[k][0];
    sum += kGL15[k][1] * (f(mid - dx) + f(mid + dx));
  }
  return half * sum;
}

}  // namespace npsurv
