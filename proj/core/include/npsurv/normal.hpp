#pragma once

// Standard normal kernels shared by the design, spline and planning code.

namespace npsurv::normal {

double pdf(double x);
double cdf(double x);
/// Upper tail 1 - cdf(x) without cancellation.
double sf(double x);
/// log cdf(x), accurate far into the lower tail.
double log_cdf(double x);
/// Inverse of cdf on (0, 1); +-infinity at the end points.
double quantile(double p);
/// Inverse of sf, i.e. quantile(1 - p) without forming 1 - p.
double upper_quantile(double p);

/// P[X < a, Y < b] for a standard bivariate normal pair with correlation rho.
double bivariate_cdf(double a, double b, double rho);

}  // namespace npsurv::normal
