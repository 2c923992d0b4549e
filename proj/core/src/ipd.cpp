#include "npsurv/ipd.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "npsurv/error.hpp"

namespace npsurv {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t row, const char* what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ParseError(row, std::string("cannot parse ") + what + " '" + s + "'");
  }
  if (!std::isfinite(v)) throw ParseError(row, std::string(what) + " must be finite");
  return v;
}

int parse_flag(const std::string& s, std::size_t row, const char* what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ParseError(row, std::string(what) + " must be 0 or 1, got '" + s + "'");
}

// Largest entry date R <= t2 - x for which t2 - R >= x holds in floating point.
double entry_before(double t2, double x) {
  double r = std::max(0.0, t2 - x);
  while (r > 0.0 && t2 - r < x) r = std::nextafter(r, 0.0);
  return r;
}

}  // namespace

IpdTable parse_ipd_csv(std::istream& in) {
  IpdTable table;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++row;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  const auto header = split_csv(trim(line));
  const std::vector<std::string> base = {"id", "time", "event", "group"};
  if (header.size() < 4 || header.size() > 5 || !std::equal(base.begin(), base.end(), header.begin()) ||
      (header.size() == 5 && header[4] != "entry")) {
    throw ParseError(1, "header must be id,time,event,group[,entry]");
  }
  table.has_entry = header.size() == 5;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(trim(line));
    if (f.size() != header.size()) {
      throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(f.size()));
    }
    IpdRow r;
    r.id = f[0];
    r.time = parse_number(f[1], row, "time");
    if (r.time <= 0.0) throw ParseError(row, "time must be positive");
    r.event = parse_flag(f[2], row, "event") == 1;
    r.group = parse_flag(f[3], row, "group");
    if (table.has_entry) {
      r.entry = parse_number(f[4], row, "entry");
      if (*r.entry < 0.0) throw ParseError(row, "entry must be non-negative");
    }
    table.rows.push_back(std::move(r));
  }
  if (table.rows.empty()) throw ParseError(row, "no data rows");
  return table;
}

IpdTable read_ipd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open IPD file '" + path + "'");
  return parse_ipd_csv(in);
}

SurvivalDataset impute_recruitment(const IpdTable& table, double t2, CounterRng& rng) {
  std::vector<Subject> subjects;
  subjects.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    Subject s;
    s.id = r.id;
    s.group = r.group;
    if (r.event) {
      s.event_time = r.time;
    } else {
      s.dropout_time = r.time;
    }
    if (r.entry) {
      s.entry = *r.entry;
    } else {
      if (r.time > t2) {
        throw InvalidArgument("impute_recruitment: observed time " + std::to_string(r.time) +
                              " exceeds final analysis date " + std::to_string(t2));
      }
      // The draw is consumed for every event row so the stream position
      // depends only on the row order.
      s.entry = r.event ? entry_before(t2, (t2 - r.time) * (1.0 - rng.uniform()) + r.time)
                        : entry_before(t2, r.time);
    }
    subjects.push_back(std::move(s));
  }
  return SurvivalDataset(std::move(subjects));
}

SurvivalDataset ingest_ipd(const std::string& path, double t2, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  return impute_recruitment(read_ipd_csv(path), t2, rng);
}

}  // namespace npsurv
