#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npsurv/survival.hpp"

namespace npsurv {

/// Link scale g(S) of a Royston-Parmar model:
/// hazard log(-log S), odds log(1/S - 1), normal -Phi^{-1}(S).
enum class SplineScale { kHazard = 0, kOdds = 1, kNormal = 2 };

std::string_view to_string(SplineScale scale);
SplineScale parse_scale(std::string_view text);

/// Knots on the log-time scale.
struct KnotVector {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> internal;

  std::size_t n_internal() const { return internal.size(); }
  std::size_t n_params() const { return internal.size() + 2; }
};

/// Boundary knots at the extreme log uncensored times, internal knots at
/// equally spaced centiles (linear-interpolation quantiles).
KnotVector place_knots(std::span<const double> uncensored_times, std::size_t n_internal);

/// Basis (1, x, v_1(x), ..., v_p(x)) of the natural cubic spline in log time x.
std::vector<double> basis(double x, const KnotVector& knots);
/// Basis and its first derivative in x, written into spans of length p + 2.
void basis(double x, const KnotVector& knots, std::span<double> value, std::span<double> slope);

/// A fitted (or hand-specified) Royston-Parmar model: g(S(t)) = s(log t; phi).
class SplineModel {
 public:
  SplineModel(SplineScale scale, KnotVector knots, std::vector<double> phi, double loglik = 0.0);

  SplineScale scale() const { return scale_; }
  const KnotVector& knots() const { return knots_; }
  const std::vector<double>& phi() const { return phi_; }
  double loglik() const { return loglik_; }
  std::size_t n_params() const { return phi_.size(); }

  /// s(x) and ds/dx. Linear outside the boundary knots.
  double eta(double x) const;
  double eta_slope(double x) const;
  double eta_curvature(double x) const;
  /// Exact infimum of ds/dx over the real line.
  double min_slope() const;

  double survival(double t) const;
  double density(double t) const;
  double hazard(double t) const;

 private:
  SplineScale scale_;
  KnotVector knots_;
  std::vector<double> phi_;
  double loglik_;
};

/// Censored-data log-likelihood: events contribute log f, censorings log S.
/// Returns -inf when the spline is not increasing on the whole real line.
double log_likelihood(const SplineModel& model, std::span<const ObservedRecord> records);

struct SplineFitOptions {
  int max_iterations = 2000;
  double f_tol = 1e-8;
  int random_restarts = 2;
};

/// Maximum-likelihood fit of one group's records. Throws EstimationError when
/// fewer than two distinct event times exist or no feasible start is found.
SplineModel fit_spline(std::span<const ObservedRecord> records, SplineScale scale,
                       std::size_t n_internal, const SplineFitOptions& opts = {});

double aic(const SplineModel& model);

/// Separate models for the two groups, fitted with the same (p, scale).
struct GroupExtrapolation {
  SplineModel model0;
  SplineModel model1;

  double combined_aic() const { return aic(model0) + aic(model1); }
  std::size_t n_internal() const { return model0.knots().n_internal(); }
  SplineScale scale() const { return model0.scale(); }
};

/// Lowest combined AIC; ties go to fewer knots, then hazard < odds < normal.
GroupExtrapolation select_model(std::span<const GroupExtrapolation> candidates);

struct SplineGrid {
  std::vector<std::size_t> knots{0, 1, 2};
  std::vector<SplineScale> scales{SplineScale::kHazard, SplineScale::kOdds, SplineScale::kNormal};
};

struct GridEntry {
  std::size_t n_internal = 0;
  SplineScale scale = SplineScale::kHazard;
  std::optional<GroupExtrapolation> fit;
  std::string error;  // set when the fit failed
};

/// Fits every (p, scale) of the grid to both groups of a snapshot.
std::vector<GridEntry> fit_grid(const Snapshot& snap, const SplineGrid& grid,
                                const SplineFitOptions& opts = {});

/// select_model over the successful grid entries.
GroupExtrapolation select_from_grid(const std::vector<GridEntry>& entries);

}  // namespace npsurv
