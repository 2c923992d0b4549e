#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "npsurv/rng.hpp"
#include "npsurv/survival.hpp"
#include "oracle_values.hpp"

namespace testing {

inline npsurv::Snapshot fixture_snapshot() {
  std::vector<npsurv::ObservedRecord> recs;
  std::size_t i = 0;
  for (const auto& row : oracle::kFixture) {
    recs.push_back({i++, row[0], row[1] != 0.0, static_cast<int>(row[2])});
  }
  return npsurv::snapshot_from_records(std::move(recs));
}

/// Random observed data: exponential event and censoring times, times
/// rounded to a grid when `ties` so that tied times occur.
inline npsurv::Snapshot random_snapshot(std::uint64_t seed, std::size_t n, bool ties = false,
                                        double hazard1 = 1.0) {
  npsurv::CounterRng rng(seed, 99);
  std::vector<npsurv::ObservedRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    const int g = static_cast<int>(i % 2);
    double t = rng.exponential() / (g == 1 ? hazard1 : 1.0);
    double c = rng.exponential() * 2.0;
    if (ties) {
      t = std::ceil(t * 4.0) / 4.0;
      c = std::ceil(c * 4.0) / 4.0;
    }
    recs.push_back({i, std::min(t, c), t <= c, g});
  }
  return npsurv::snapshot_from_records(std::move(recs));
}

/// Two-arm panel with uniform entry on [0, accrual] and exponential times.
inline npsurv::SurvivalDataset exponential_trial(std::uint64_t seed, std::size_t n_per_group, double rate0,
                                                 double rate1, double accrual) {
  npsurv::CounterRng rng(seed, 7);
  std::vector<npsurv::Subject> subjects;
  for (std::size_t i = 0; i < 2 * n_per_group; ++i) {
    npsurv::Subject s;
    s.id = std::to_string(i);
    s.group = i < n_per_group ? 0 : 1;
    s.entry = rng.uniform(0.0, accrual);
    s.event_time = rng.exponential() / (s.group == 0 ? rate0 : rate1);
    subjects.push_back(s);
  }
  return npsurv::SurvivalDataset(std::move(subjects));
}

}  // namespace testing
