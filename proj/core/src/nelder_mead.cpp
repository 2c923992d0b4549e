#include "npsurv/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace npsurv {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts) {
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> values(d + 1);
  values[0] = f(x0);
  for (std::size_t j = 0; j < d; ++j) {
    const double h = opts.step.empty() ? 0.1 : opts.step[j];
    simplex[j + 1][j] += h;
    values[j + 1] = f(simplex[j + 1]);
    // Try the opposite direction and shorter edges before giving up on a vertex.
    for (double trial : {-h, 0.5 * h, -0.5 * h, 0.1 * h, -0.1 * h}) {
      if (std::isfinite(values[j + 1])) break;
      simplex[j + 1][j] = x0[j] + trial;
      values[j + 1] = f(simplex[j + 1]);
    }
  }

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  NelderMeadResult result;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];
    if (std::isfinite(values[worst]) && values[worst] - values[best] <= opts.f_tol) {
      result.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < d + 1; ++k) {
      if (k == worst) continue;
      for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[k][j] / static_cast<double>(d);
    }
    for (std::size_t j = 0; j < d; ++j) xr[j] = centroid[j] + kReflect * (centroid[j] - simplex[worst][j]);
    const double fr = f(xr);
    if (fr < values[best]) {
      for (std::size_t j = 0; j < d; ++j) xe[j] = centroid[j] + kExpand * (xr[j] - centroid[j]);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    for (std::size_t j = 0; j < d; ++j) {
      xc[j] = outside ? centroid[j] + kContract * (xr[j] - centroid[j])
                      : centroid[j] + kContract * (simplex[worst][j] - centroid[j]);
    }
    const double fc = f(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < d + 1; ++k) {
      if (k == best) continue;
      for (std::size_t j = 0; j < d; ++j) {
        simplex[k][j] = simplex[best][j] + kShrink * (simplex[k][j] - simplex[best][j]);
      }
      values[k] = f(simplex[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = it;
  return result;
}

}  // namespace npsurv
