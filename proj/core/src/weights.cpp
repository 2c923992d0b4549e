#include "npsurv/weights.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "npsurv/error.hpp"

namespace npsurv {

namespace {

double parse_double(std::string_view s, std::string_view context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InvalidArgument("bad number in weight spec '" + std::string(context) + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

WeightSpec WeightSpec::fh(double rho, double gamma) {
  if (!(rho >= 0.0) || !(gamma >= 0.0) || std::isinf(rho) || std::isinf(gamma)) {
    throw InvalidArgument("Fleming-Harrington parameters must be finite and non-negative");
  }
  return {WeightFamily::kFlemingHarrington, rho, gamma, 0.0};
}

WeightSpec WeightSpec::modest(double s_star) {
  if (!(s_star >= 0.0) || std::isinf(s_star)) {
    throw InvalidArgument("modest threshold must be finite and non-negative");
  }
  return {WeightFamily::kModest, 0.0, 0.0, s_star};
}

WeightSpec WeightSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("weight spec '" + std::string(text) + "' must look like fh:rho,gamma or modest:s");
  }
  const auto family = text.substr(0, colon);
  const auto args = text.substr(colon + 1);
  if (family == "fh") {
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) {
      throw InvalidArgument("weight spec '" + std::string(text) + "' needs two parameters");
    }
    return fh(parse_double(args.substr(0, comma), text), parse_double(args.substr(comma + 1), text));
  }
  if (family == "modest") return modest(parse_double(args, text));
  throw InvalidArgument("unknown weight family '" + std::string(family) + "'");
}

std::string WeightSpec::to_string() const {
  if (family == WeightFamily::kModest) return "modest:" + fmt(s_star);
  return "fh:" + fmt(rho) + "," + fmt(gamma);
}

bool WeightSpec::is_log_rank() const {
  return (family == WeightFamily::kFlemingHarrington && rho == 0.0 && gamma == 0.0) ||
         (family == WeightFamily::kModest && s_star == 0.0);
}

std::vector<WeightSpec> parse_weight_list(std::string_view text) {
  std::vector<WeightSpec> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto next = text.find_first_of("; \t\n", pos);
    const auto token = text.substr(pos, next == std::string_view::npos ? text.size() - pos : next - pos);
    if (!token.empty()) out.push_back(WeightSpec::parse(token));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (out.empty()) throw InvalidArgument("empty weight list");
  return out;
}

std::string to_string(const std::vector<WeightSpec>& specs) {
  std::string out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (k) out += ';';
    out += specs[k].to_string();
  }
  return out;
}

void require_distinct(const std::vector<WeightSpec>& specs) {
  for (std::size_t a = 0; a < specs.size(); ++a) {
    for (std::size_t b = a + 1; b < specs.size(); ++b) {
      if (specs[a] == specs[b]) {
        throw InvalidArgument("weight " + specs[a].to_string() + " listed twice");
      }
    }
  }
}

double weight_from_survival(const WeightSpec& spec, double surv_left, double surv_threshold_left) {
  if (spec.family == WeightFamily::kModest) {
    return 1.0 / std::max(surv_left, surv_threshold_left);
  }
  // std::pow(0, 0) == 1, which is the convention wanted here.
  return std::pow(1.0 - surv_left, spec.rho) * std::pow(surv_left, spec.gamma);
}

double weight_value(const WeightSpec& spec, const StepFunction& pooled_km, double s) {
  const double threshold =
      spec.family == WeightFamily::kModest ? pooled_km.left_limit(spec.s_star) : 0.0;
  return weight_from_survival(spec, pooled_km.left_limit(s), threshold);
}

}  // namespace npsurv
