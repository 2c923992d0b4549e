#include "npsurv/logrank.hpp"

#include <array>
#include <cmath>

#include "npsurv/error.hpp"
#include "npsurv/normal.hpp"

namespace npsurv {

LogRankData::LogRankData(const Snapshot& snap) : n_total_(std::max(snap.n_total, snap.records.size())) {
  const auto& recs = snap.records;
  if (recs.empty()) return;
  std::size_t y = recs.size();
  std::size_t y1 = snap.group_count(1);
  if (y1 == 0 || y1 == y) {
    throw EstimationError("log-rank statistic needs subjects from both groups");
  }
  km_ = kaplan_meier(snap, GroupSelector::kPooled);
  std::size_t k = 0;
  while (k < recs.size()) {
    const double t = recs[k].time;
    std::size_t removed = 0, removed1 = 0;
    for (std::size_t j = k; j < recs.size() && recs[j].time == t; ++j) {
      if (recs[j].event) {
        events_.push_back({recs[j].subject, t, recs[j].group, static_cast<double>(y),
                           static_cast<double>(y1)});
      }
      ++removed;
      removed1 += recs[j].group == 1;
    }
    k += removed;
    y -= removed;
    y1 -= removed1;
  }
}

std::vector<double> LogRankData::weights(const WeightSpec& spec) const {
  std::vector<double> q(events_.size());
  const double threshold = spec.family == WeightFamily::kModest ? km_.left_limit(spec.s_star) : 0.0;
  for (std::size_t e = 0; e < events_.size(); ++e) {
    q[e] = weight_from_survival(spec, km_.left_limit(events_[e].time), threshold);
  }
  return q;
}

std::vector<double> LogRankData::contributions(const WeightSpec& spec) const {
  auto c = weights(spec);
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const auto& ev = events_[e];
    c[e] *= ev.at_risk1 / ev.at_risk - static_cast<double>(ev.group);
  }
  return c;
}

Eigen::VectorXd LogRankData::statistics(std::span<const WeightSpec> specs) const {
  Eigen::VectorXd t(static_cast<Eigen::Index>(specs.size()));
  const double scale = n_total_ ? 1.0 / std::sqrt(static_cast<double>(n_total_)) : 0.0;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    double sum = 0.0;
    for (double c : contributions(specs[l])) sum += c;
    t[static_cast<Eigen::Index>(l)] = scale * sum;
  }
  return t;
}

Eigen::MatrixXd LogRankData::covariance(std::span<const WeightSpec> specs) const {
  const auto m = static_cast<Eigen::Index>(specs.size());
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m, m);
  if (events_.empty()) return sigma;
  std::vector<std::vector<double>> q;
  q.reserve(specs.size());
  for (const auto& spec : specs) q.push_back(weights(spec));
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const double p = events_[e].at_risk1 / events_[e].at_risk;
    const double v = p * (1.0 - p);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = a; b < m; ++b) {
        sigma(a, b) += q[static_cast<std::size_t>(a)][e] * q[static_cast<std::size_t>(b)][e] * v;
      }
    }
  }
  sigma /= static_cast<double>(n_total_);
  sigma.triangularView<Eigen::StrictlyLower>() = sigma.transpose().triangularView<Eigen::StrictlyLower>();
  return sigma;
}

WlrResult wlr_statistic(const Snapshot& snap, const WeightSpec& spec) {
  const LogRankData data(snap);
  const std::array<WeightSpec, 1> one{spec};
  WlrResult r;
  r.statistic = data.statistics(one)[0];
  r.variance = data.covariance(one)(0, 0);
  r.standardized = r.variance > 0.0 ? r.statistic / std::sqrt(r.variance) : 0.0;
  r.events_used = data.events().size();
  return r;
}

Eigen::MatrixXd covariance_matrix(const Snapshot& snap, std::span<const WeightSpec> specs) {
  if (specs.empty()) throw InvalidArgument("covariance_matrix: need at least one weight");
  return LogRankData(snap).covariance(specs);
}

IncrementResult standardized_increment(const Snapshot& first, const Snapshot& second,
                                       const WeightSpec& spec) {
  if (!(first.calendar_time < second.calendar_time)) {
    throw InvalidArgument("standardized_increment: first analysis must precede the second");
  }
  const WlrResult a = wlr_statistic(first, spec);
  const WlrResult b = wlr_statistic(second, spec);
  const double dvar = b.variance - a.variance;
  if (!(dvar > 1e-12 * b.variance) || !(dvar > 0.0)) {
    throw EstimationError("no second-stage information: variance increment is not positive");
  }
  IncrementResult r;
  r.z = (b.statistic - a.statistic) / std::sqrt(dvar);
  r.p2 = normal::sf(r.z);
  return r;
}

}  // namespace npsurv
