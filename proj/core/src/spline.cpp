#include "npsurv/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "npsurv/error.hpp"
#include "npsurv/nelder_mead.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/rng.hpp"

namespace npsurv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double cube_plus(double u) { return u > 0.0 ? u * u * u : 0.0; }
inline double square_plus(double u) { return u > 0.0 ? u * u : 0.0; }
inline double plus(double u) { return u > 0.0 ? u : 0.0; }

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double lambda_of(const KnotVector& k, double knot) { return (k.upper - knot) / (k.upper - k.lower); }

double spline_value(const KnotVector& k, std::span<const double> phi, double x) {
  double v = phi[0] + phi[1] * x;
  for (std::size_t j = 0; j < k.internal.size(); ++j) {
    const double l = lambda_of(k, k.internal[j]);
    v += phi[j + 2] * (cube_plus(x - k.internal[j]) - l * cube_plus(x - k.lower) -
                       (1.0 - l) * cube_plus(x - k.upper));
  }
  return v;
}

double spline_slope(const KnotVector& k, std::span<const double> phi, double x) {
  double v = phi[1];
  for (std::size_t j = 0; j < k.internal.size(); ++j) {
    const double l = lambda_of(k, k.internal[j]);
    v += 3.0 * phi[j + 2] *
         (square_plus(x - k.internal[j]) - l * square_plus(x - k.lower) - (1.0 - l) * square_plus(x - k.upper));
  }
  return v;
}

double spline_curvature(const KnotVector& k, std::span<const double> phi, double x) {
  double v = 0.0;
  for (std::size_t j = 0; j < k.internal.size(); ++j) {
    const double l = lambda_of(k, k.internal[j]);
    v += 6.0 * phi[j + 2] * (plus(x - k.internal[j]) - l * plus(x - k.lower) - (1.0 - l) * plus(x - k.upper));
  }
  return v;
}

// The slope is piecewise quadratic between knots and constant outside them,
// so its infimum is attained at a knot or at a vertex inside a knot interval.
double min_slope_of(const KnotVector& k, std::span<const double> phi) {
  if (k.internal.empty()) return phi[1];
  std::vector<double> pts;
  pts.reserve(k.internal.size() + 2);
  pts.push_back(k.lower);
  pts.insert(pts.end(), k.internal.begin(), k.internal.end());
  pts.push_back(k.upper);
  double lo = spline_slope(k, phi, pts.front());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    lo = std::min(lo, spline_slope(k, phi, b));
    if (!(b > a)) continue;
    const double ca = spline_curvature(k, phi, a), cb = spline_curvature(k, phi, b);
    if ((ca < 0.0 && cb > 0.0) || (ca > 0.0 && cb < 0.0)) {
      const double x = a + (b - a) * ca / (ca - cb);
      lo = std::min(lo, spline_slope(k, phi, x));
    }
  }
  return lo;
}

double quantile7(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// g(S) expressed through the cumulative hazard A = -log S.
double link_from_cumhaz(SplineScale scale, double cumhaz) {
  switch (scale) {
    case SplineScale::kHazard: return std::log(cumhaz);
    case SplineScale::kOdds: return std::log(std::expm1(cumhaz));
    case SplineScale::kNormal: return -normal::quantile(std::exp(-cumhaz));
  }
  return 0.0;
}

// log S and log f contributions given eta, slope (d eta / d log t) and log t.
inline double log_surv(SplineScale scale, double eta) {
  switch (scale) {
    case SplineScale::kHazard: return -std::exp(eta);
    case SplineScale::kOdds: return -softplus(eta);
    case SplineScale::kNormal: return normal::log_cdf(-eta);
  }
  return 0.0;
}

inline double log_dens(SplineScale scale, double eta, double slope, double log_t) {
  const double tail = std::log(slope) - log_t;
  switch (scale) {
    case SplineScale::kHazard: return eta - std::exp(eta) + tail;
    case SplineScale::kOdds: return eta - 2.0 * softplus(eta) + tail;
    case SplineScale::kNormal: return -0.5 * eta * eta - kLogSqrt2Pi + tail;
  }
  return 0.0;
}

std::vector<ObservedRecord> sorted_records(std::span<const ObservedRecord> records) {
  std::vector<ObservedRecord> out(records.begin(), records.end());
  std::sort(out.begin(), out.end(), [](const ObservedRecord& a, const ObservedRecord& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.event > b.event;
  });
  return out;
}

// Design matrices of a fit with columns rescaled to unit max-abs, so the
// simplex works on comparably scaled coordinates.
struct FitData {
  SplineScale scale;
  KnotVector knots;
  std::size_t d = 0;
  std::vector<double> col_scale;
  std::vector<double> value;  // n x d row-major
  std::vector<double> slope;  // events only, n_events x d
  std::vector<double> log_t;
  std::vector<char> event;
  double sum_event_log_t = 0.0;

  std::vector<double> to_phi(std::span<const double> theta) const {
    std::vector<double> phi(d);
    for (std::size_t j = 0; j < d; ++j) phi[j] = theta[j] / col_scale[j];
    return phi;
  }

  double neg_loglik(std::span<const double> theta) const {
    const auto phi = to_phi(theta);
    if (!(min_slope_of(knots, phi) > 0.0)) return std::numeric_limits<double>::infinity();
    double ll = 0.0;
    std::size_t e = 0;
    const std::size_t n = log_t.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &value[i * d];
      double eta = 0.0;
      for (std::size_t j = 0; j < d; ++j) eta += row[j] * theta[j];
      if (event[i]) {
        const double* srow = &slope[e * d];
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += srow[j] * theta[j];
        ++e;
        if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
        ll += log_dens(scale, eta, s, log_t[i]);
      } else {
        ll += log_surv(scale, eta);
      }
    }
    if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
    return -ll;
  }
};

}  // namespace

std::string_view to_string(SplineScale scale) {
  switch (scale) {
    case SplineScale::kHazard: return "hazard";
    case SplineScale::kOdds: return "odds";
    case SplineScale::kNormal: return "normal";
  }
  return "?";
}

SplineScale parse_scale(std::string_view text) {
  if (text == "hazard") return SplineScale::kHazard;
  if (text == "odds") return SplineScale::kOdds;
  if (text == "normal") return SplineScale::kNormal;
  throw InvalidArgument("unknown spline scale '" + std::string(text) + "'");
}

KnotVector place_knots(std::span<const double> uncensored_times, std::size_t n_internal) {
  std::vector<double> x;
  x.reserve(uncensored_times.size());
  for (double t : uncensored_times) {
    if (!(t > 0.0)) throw InvalidArgument("place_knots: times must be positive");
    x.push_back(std::log(t));
  }
  std::sort(x.begin(), x.end());
  if (x.size() < 2 || !(x.back() > x.front())) {
    throw EstimationError("spline needs at least two distinct uncensored times");
  }
  KnotVector k;
  k.lower = x.front();
  k.upper = x.back();
  for (std::size_t j = 1; j <= n_internal; ++j) {
    const double q = quantile7(x, static_cast<double>(j) / static_cast<double>(n_internal + 1));
    if (!(q > k.lower && q < k.upper)) {
      throw EstimationError("internal knot coincides with a boundary knot (tied event times)");
    }
    k.internal.push_back(q);
  }
  return k;
}

std::vector<double> basis(double x, const KnotVector& knots) {
  std::vector<double> v(knots.n_params()), s(knots.n_params());
  basis(x, knots, v, s);
  return v;
}

void basis(double x, const KnotVector& knots, std::span<double> value, std::span<double> slope) {
  value[0] = 1.0;
  value[1] = x;
  slope[0] = 0.0;
  slope[1] = 1.0;
  for (std::size_t j = 0; j < knots.internal.size(); ++j) {
    const double kj = knots.internal[j];
    const double l = lambda_of(knots, kj);
    value[j + 2] = cube_plus(x - kj) - l * cube_plus(x - knots.lower) - (1.0 - l) * cube_plus(x - knots.upper);
    slope[j + 2] = 3.0 * (square_plus(x - kj) - l * square_plus(x - knots.lower) -
                          (1.0 - l) * square_plus(x - knots.upper));
  }
}

SplineModel::SplineModel(SplineScale scale, KnotVector knots, std::vector<double> phi, double loglik)
    : scale_(scale), knots_(std::move(knots)), phi_(std::move(phi)), loglik_(loglik) {
  if (!(knots_.upper > knots_.lower)) throw InvalidArgument("spline: boundary knots must increase");
  for (double k : knots_.internal) {
    if (!(k > knots_.lower && k < knots_.upper)) {
      throw InvalidArgument("spline: internal knots must lie strictly between the boundary knots");
    }
  }
  if (phi_.size() != knots_.n_params()) throw InvalidArgument("spline: coefficient count must be p + 2");
}

double SplineModel::eta(double x) const { return spline_value(knots_, phi_, x); }
double SplineModel::eta_slope(double x) const { return spline_slope(knots_, phi_, x); }
double SplineModel::eta_curvature(double x) const { return spline_curvature(knots_, phi_, x); }
double SplineModel::min_slope() const { return min_slope_of(knots_, phi_); }

double SplineModel::survival(double t) const {
  if (!(t > 0.0)) return 1.0;
  const double e = eta(std::log(t));
  switch (scale_) {
    case SplineScale::kHazard: return std::exp(-std::exp(e));
    case SplineScale::kOdds: return 1.0 / (1.0 + std::exp(e));
    case SplineScale::kNormal: return normal::cdf(-e);
  }
  return 1.0;
}

double SplineModel::density(double t) const {
  if (!(t > 0.0)) return 0.0;
  const double x = std::log(t);
  const double s = eta_slope(x);
  if (!(s > 0.0)) return 0.0;
  return std::exp(log_dens(scale_, eta(x), s, x));
}

double SplineModel::hazard(double t) const {
  if (!(t > 0.0)) return 0.0;
  const double x = std::log(t);
  const double e = eta(x);
  const double s = std::max(0.0, eta_slope(x));
  switch (scale_) {
    case SplineScale::kHazard: return std::exp(e) * s / t;
    case SplineScale::kOdds: return s / t / (1.0 + std::exp(-e));
    case SplineScale::kNormal:
      return s / t * std::exp(-0.5 * e * e - kLogSqrt2Pi - normal::log_cdf(-e));
  }
  return 0.0;
}

double log_likelihood(const SplineModel& model, std::span<const ObservedRecord> records) {
  if (!(model.min_slope() > 0.0)) return kNegInf;
  double ll = 0.0;
  for (const auto& r : sorted_records(records)) {
    const double x = std::log(r.time);
    const double e = model.eta(x);
    if (r.event) {
      const double s = model.eta_slope(x);
      if (!(s > 0.0)) return kNegInf;
      ll += log_dens(model.scale(), e, s, x);
    } else {
      ll += log_surv(model.scale(), e);
    }
  }
  return std::isnan(ll) ? kNegInf : ll;
}

SplineModel fit_spline(std::span<const ObservedRecord> input, SplineScale scale, std::size_t n_internal,
                       const SplineFitOptions& opts) {
  const auto records = sorted_records(input);
  std::vector<double> uncensored;
  for (const auto& r : records) {
    if (r.event) uncensored.push_back(r.time);
  }
  KnotVector knots = place_knots(uncensored, n_internal);

  FitData data;
  data.scale = scale;
  data.knots = knots;
  data.d = knots.n_params();
  const std::size_t d = data.d;
  const std::size_t n = records.size();
  data.value.resize(n * d);
  data.slope.reserve(uncensored.size() * d);
  data.log_t.resize(n);
  data.event.resize(n);
  std::vector<double> v(d), s(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(records[i].time);
    basis(x, knots, v, s);
    std::copy(v.begin(), v.end(), data.value.begin() + static_cast<std::ptrdiff_t>(i * d));
    data.log_t[i] = x;
    data.event[i] = records[i].event;
    if (records[i].event) data.slope.insert(data.slope.end(), s.begin(), s.end());
  }
  data.col_scale.assign(d, 1.0);
  for (std::size_t j = 2; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(data.value[i * d + j]));
    if (m > 0.0) data.col_scale[j] = m;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 2; j < d; ++j) data.value[i * d + j] /= data.col_scale[j];
  }
  for (std::size_t e = 0; e * d < data.slope.size(); ++e) {
    for (std::size_t j = 2; j < d; ++j) data.slope[e * d + j] /= data.col_scale[j];
  }

  // Start: least squares of g(exp(-A_NA(t))) on the basis at distinct event times.
  std::vector<double> event_x, target;
  {
    double cum = 0.0;
    std::size_t risk = n, k = 0;
    while (k < n) {
      const double t = records[k].time;
      std::size_t dk = 0, removed = 0;
      while (k < n && records[k].time == t) {
        dk += records[k].event;
        ++removed;
        ++k;
      }
      if (dk > 0) {
        cum += static_cast<double>(dk) / static_cast<double>(risk);
        const double g = link_from_cumhaz(scale, cum);
        if (std::isfinite(g)) {
          event_x.push_back(std::log(t));
          target.push_back(g);
        }
      }
      risk -= removed;
    }
  }
  auto objective = [&data](std::span<const double> theta) { return data.neg_loglik(theta); };
  auto least_squares = [&](std::size_t cols) {
    std::vector<double> theta(d, 0.0);
    if (event_x.size() < 2) return theta;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(event_x.size()), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd y(static_cast<Eigen::Index>(event_x.size()));
    for (std::size_t i = 0; i < event_x.size(); ++i) {
      basis(event_x[i], knots, v, s);
      for (std::size_t j = 0; j < cols; ++j) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j] / data.col_scale[j];
      }
      y[static_cast<Eigen::Index>(i)] = target[i];
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(y);
    for (std::size_t j = 0; j < cols; ++j) theta[j] = sol[static_cast<Eigen::Index>(j)];
    return theta;
  };
  std::vector<double> start = least_squares(d);
  if (!std::isfinite(objective(start))) start = least_squares(2);
  if (!std::isfinite(objective(start))) {
    std::fill(start.begin(), start.end(), 0.0);
    start[0] = target.empty() ? 0.0 : target[target.size() / 2] - event_x[event_x.size() / 2];
    start[1] = 1.0;
  }

  NelderMeadOptions nm;
  nm.max_iterations = opts.max_iterations;
  nm.f_tol = opts.f_tol;
  auto run = [&](std::vector<double> x0) {
    NelderMeadResult best = nelder_mead(objective, std::move(x0), nm);
    // Restart from the optimum with a fresh simplex until it stops improving.
    for (int restart = 0; restart < 4 && std::isfinite(best.value); ++restart) {
      nm.step.assign(d, 0.02);
      NelderMeadResult again = nelder_mead(objective, best.x, nm);
      nm.step.clear();
      const bool improved = again.value < best.value - opts.f_tol;
      if (again.value < best.value) best = std::move(again);
      if (!improved) break;
    }
    return best;
  };
  NelderMeadResult best = run(start);
  if (!std::isfinite(best.value)) {
    CounterRng rng(derive_seed(0x5EEDu, n_internal, static_cast<std::uint64_t>(scale)));
    for (int r = 0; r < opts.random_restarts && !std::isfinite(best.value); ++r) {
      std::vector<double> x0 = start;
      for (double& xi : x0) xi += 0.5 * normal::quantile(rng.uniform());
      x0[1] = std::abs(x0[1]) + 0.1;
      NelderMeadResult trial = run(x0);
      if (trial.value < best.value) best = std::move(trial);
    }
  }
  if (!std::isfinite(best.value)) {
    throw EstimationError("spline fit failed: no finite likelihood found (" + std::string(to_string(scale)) +
                          ", p=" + std::to_string(n_internal) + ")");
  }
  SplineModel model(scale, knots, data.to_phi(best.x));
  return SplineModel(scale, std::move(knots), data.to_phi(best.x), log_likelihood(model, records));
}

double aic(const SplineModel& model) {
  return 2.0 * static_cast<double>(model.n_params()) - 2.0 * model.loglik();
}

GroupExtrapolation select_model(std::span<const GroupExtrapolation> candidates) {
  if (candidates.empty()) throw EstimationError("no spline model available for selection");
  const GroupExtrapolation* best = &candidates[0];
  for (const auto& c : candidates.subspan(1)) {
    const double a = c.combined_aic(), b = best->combined_aic();
    if (a < b || (a == b && (c.n_internal() < best->n_internal() ||
                             (c.n_internal() == best->n_internal() && c.scale() < best->scale())))) {
      best = &c;
    }
  }
  return *best;
}

std::vector<GridEntry> fit_grid(const Snapshot& snap, const SplineGrid& grid, const SplineFitOptions& opts) {
  std::vector<ObservedRecord> g0, g1;
  for (const auto& r : snap.records) (r.group == 0 ? g0 : g1).push_back(r);
  std::vector<GridEntry> out;
  for (std::size_t p : grid.knots) {
    for (SplineScale scale : grid.scales) {
      GridEntry entry;
      entry.n_internal = p;
      entry.scale = scale;
      try {
        entry.fit = GroupExtrapolation{fit_spline(g0, scale, p, opts), fit_spline(g1, scale, p, opts)};
      } catch (const EstimationError& e) {
        entry.error = e.what();
      } catch (const NumericalError& e) {
        entry.error = e.what();
      }
      out.push_back(std::move(entry));
    }
  }
  return out;
}

GroupExtrapolation select_from_grid(const std::vector<GridEntry>& entries) {
  std::vector<GroupExtrapolation> ok;
  for (const auto& e : entries) {
    if (e.fit) ok.push_back(*e.fit);
  }
  if (ok.empty()) throw EstimationError("every spline model in the grid failed to fit");
  return select_model(ok);
}

}  // namespace npsurv
