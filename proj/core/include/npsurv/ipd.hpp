#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "npsurv/rng.hpp"
#include "npsurv/survival.hpp"

namespace npsurv {

/// One row of an individual-patient-data file: the observation at the final
/// analysis, optionally with the calendar entry date.
struct IpdRow {
  std::string id;
  double time = 0.0;
  bool event = false;
  int group = 0;
  std::optional<double> entry;
};

struct IpdTable {
  std::vector<IpdRow> rows;
  bool has_entry = false;
};

/// Parses `id,time,event,group[,entry]` CSV. Throws ParseError with the row
/// number on malformed content.
IpdTable parse_ipd_csv(std::istream& in);
IpdTable read_ipd_csv(const std::string& path);

/// Reconstructs entry dates for data observed at final calendar date t2.
/// Censored rows enter at t2 - X; rows with an event enter uniformly on
/// [0, t2 - T]. Rows that already carry an entry keep it.
SurvivalDataset impute_recruitment(const IpdTable& table, double t2, CounterRng& rng);

/// read_ipd_csv + impute_recruitment with a stream keyed by `seed`.
SurvivalDataset ingest_ipd(const std::string& path, double t2, std::uint64_t seed);

}  // namespace npsurv
