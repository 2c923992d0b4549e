#include "npsurv/mdir.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <thread>

#include "npsurv/error.hpp"
#include "npsurv/rng.hpp"

namespace npsurv {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) throw InvalidArgument("pseudo_inverse: matrix must be square");
  const double scale = m.cwiseAbs().maxCoeff();
  if (m.size() == 0 || scale == 0.0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("pseudo_inverse: matrix is not symmetric");
  }
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("pseudo_inverse: eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = rel_tol * lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    inv[k] = std::abs(lambda[k]) <= cutoff ? 0.0 : 1.0 / lambda[k];
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Eigen::MatrixXd out = v * inv.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

MdirKernel::MdirKernel(const Eigen::MatrixXd& sigma, double rel_tol)
    : dim_(static_cast<std::size_t>(sigma.rows())) {
  if (dim_ == 0 || dim_ > kMaxMdirWeights) {
    throw InvalidArgument("mdir: number of weights must be between 1 and 6");
  }
  for (std::uint32_t mask = 1; mask < (1u << dim_); ++mask) {
    Subset s;
    s.mask = mask;
    for (std::size_t l = 0; l < dim_; ++l) {
      if (mask & (1u << l)) s.index.push_back(l);
    }
    const auto k = static_cast<Eigen::Index>(s.index.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        sub(a, b) = sigma(static_cast<Eigen::Index>(s.index[static_cast<std::size_t>(a)]),
                          static_cast<Eigen::Index>(s.index[static_cast<std::size_t>(b)]));
      }
    }
    const Eigen::MatrixXd p = pseudo_inverse(sub, rel_tol);
    s.pinv.resize(static_cast<std::size_t>(k * k));
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) s.pinv[static_cast<std::size_t>(a * k + b)] = p(a, b);
    }
    subsets_.push_back(std::move(s));
  }
}

double MdirKernel::subset_value(const Subset& s, std::span<const double> t, bool& admissible) const {
  const std::size_t k = s.index.size();
  double quad = 0.0;
  admissible = true;
  for (std::size_t a = 0; a < k; ++a) {
    double v = 0.0;
    for (std::size_t b = 0; b < k; ++b) v += s.pinv[a * k + b] * t[s.index[b]];
    if (v < 0.0) {
      admissible = false;
      return 0.0;
    }
    quad += t[s.index[a]] * v;
  }
  return quad;
}

MdirStatistic MdirKernel::evaluate(std::span<const double> t) const {
  MdirStatistic out;
  const Subset* best = nullptr;
  for (const auto& s : subsets_) {
    bool ok = false;
    const double v = subset_value(s, t, ok);
    if (ok && v > out.statistic) {
      out.statistic = v;
      best = &s;
    }
  }
  if (best) out.achieving_subset = best->index;
  return out;
}

double MdirKernel::value(std::span<const double> t) const {
  double w = 0.0;
  for (const auto& s : subsets_) {
    bool ok = false;
    const double v = subset_value(s, t, ok);
    if (ok && v > w) w = v;
  }
  return w;
}

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_specs(std::span<const WeightSpec> specs) {
  if (specs.empty() || specs.size() > kMaxMdirWeights) {
    throw InvalidArgument("mdir: number of weights must be between 1 and 6");
  }
  require_distinct(std::vector<WeightSpec>(specs.begin(), specs.end()));
}

}  // namespace

MdirStatistic mdir_statistic(const Snapshot& snap, std::span<const WeightSpec> specs) {
  check_specs(specs);
  const LogRankData data(snap);
  const MdirKernel kernel(data.covariance(specs));
  return kernel.evaluate(as_span(data.statistics(specs)));
}

MdirBootstrap::MdirBootstrap(const Snapshot& snap, std::span<const WeightSpec> specs, double rel_tol) {
  check_specs(specs);
  const LogRankData data(snap);
  events_ = data.events();
  m_ = specs.size();
  scale_ = data.n_total() ? 1.0 / std::sqrt(static_cast<double>(data.n_total())) : 0.0;
  contrib_.assign(events_.size() * m_, 0.0);
  for (std::size_t l = 0; l < m_; ++l) {
    const auto c = data.contributions(specs[l]);
    for (std::size_t e = 0; e < events_.size(); ++e) contrib_[e * m_ + l] = c[e];
  }
  sigma_ = data.covariance(specs);
  stats_ = data.statistics(specs);
  kernel_ = MdirKernel(sigma_, rel_tol);
  observed_ = kernel_.evaluate(as_span(stats_));
}

double MdirBootstrap::resampled(std::span<const double> signs) const {
  std::array<double, kMaxMdirWeights> t{};
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const double g = signs[e];
    const double* c = &contrib_[e * m_];
    for (std::size_t l = 0; l < m_; ++l) t[l] += g * c[l];
  }
  for (std::size_t l = 0; l < m_; ++l) t[l] *= scale_;
  return kernel_.value(std::span<const double>(t.data(), m_));
}

MdirResult MdirBootstrap::p_value(std::size_t replicates, const SignSource& signs, unsigned threads) const {
  if (replicates == 0) throw InvalidArgument("wild bootstrap needs at least one replicate");
  MdirResult r;
  r.statistic = observed_.statistic;
  r.achieving_subset = observed_.achieving_subset;
  r.bootstrap_reps = replicates;
  if (observed_.statistic <= 0.0) {
    r.p_value = 1.0;  // every W* >= 0 = W
    return r;
  }
  auto count_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> g(events_.size());
    std::size_t hits = 0;
    for (std::size_t b = begin; b < end; ++b) {
      signs(b, events_, g);
      hits += at_least_as_extreme(resampled(g), observed_.statistic);
    }
    return hits;
  };
  std::size_t hits = 0;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(replicates)));
  if (threads == 1) {
    hits = count_range(0, replicates);
  } else {
    std::vector<std::size_t> partial(threads, 0);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = replicates * w / threads;
      const std::size_t end = replicates * (w + 1) / threads;
      pool.emplace_back([&, w, begin, end] { partial[w] = count_range(begin, end); });
    }
    for (auto& th : pool) th.join();
    for (auto h : partial) hits += h;
  }
  r.p_value = static_cast<double>(1 + hits) / static_cast<double>(replicates + 1);
  return r;
}

SignSource rademacher_signs(std::uint64_t seed) {
  return [gen = RademacherSigns(seed)](std::uint64_t b, std::span<const LogRankData::Event> events,
                                       std::span<double> out) {
    std::size_t max_subject = 0;
    for (const auto& ev : events) max_subject = std::max(max_subject, ev.subject);
    std::vector<std::array<std::uint32_t, 4>> blocks(max_subject / 128 + 1);
    for (std::size_t k = 0; k < blocks.size(); ++k) blocks[k] = gen.block(b, k);
    for (std::size_t e = 0; e < events.size(); ++e) {
      const std::uint64_t subject = events[e].subject;
      const auto& bits = blocks[subject / 128];
      const std::uint64_t r = subject % 128;
      out[e] = ((bits[r / 32] >> (r % 32)) & 1u) ? 1.0 : -1.0;
    }
  };
}

MdirResult wild_bootstrap_pvalue(const Snapshot& snap, std::span<const WeightSpec> specs,
                                 std::size_t replicates, std::uint64_t seed, unsigned threads) {
  if (replicates == 0) throw InvalidArgument("wild bootstrap needs at least one replicate");
  const MdirBootstrap boot(snap, specs);
  return boot.p_value(replicates, rademacher_signs(seed), threads);
}

}  // namespace npsurv
