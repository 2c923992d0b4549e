#pragma once

#include <functional>
#include <span>
#include <vector>

namespace npsurv {

struct NelderMeadOptions {
  int max_iterations = 2000;
  /// Stop once max - min of the simplex values falls below this.
  double f_tol = 1e-8;
  /// Initial edge length per coordinate; 0.1 for every coordinate if empty.
  std::vector<double> step;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimises f with the Nelder-Mead simplex method. f may return +inf to
/// mark infeasible points; they are never accepted as improvements.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts = {});

}  // namespace npsurv
