#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "npsurv/survival.hpp"

namespace npsurv {

enum class WeightFamily { kFlemingHarrington, kModest };

/// Weight-function descriptor. Textual form: `fh:rho,gamma` or `modest:s_star`.
struct WeightSpec {
  WeightFamily family = WeightFamily::kFlemingHarrington;
  double rho = 0.0;
  double gamma = 0.0;
  double s_star = 0.0;

  static WeightSpec fh(double rho, double gamma);
  static WeightSpec modest(double s_star);
  static WeightSpec log_rank() { return fh(0.0, 0.0); }
  static WeightSpec parse(std::string_view text);

  std::string to_string() const;
  bool is_log_rank() const;

  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

/// Parses a list separated by ';' or whitespace, e.g. "fh:0,0;fh:1,0".
std::vector<WeightSpec> parse_weight_list(std::string_view text);
std::string to_string(const std::vector<WeightSpec>& specs);

/// Throws InvalidArgument if two specs in the list coincide.
void require_distinct(const std::vector<WeightSpec>& specs);

/// The weight as a function of the pooled survival just before s and, for
/// modest weights, the pooled survival just before the threshold s*.
/// 0^0 is taken as 1.
double weight_from_survival(const WeightSpec& spec, double surv_left, double surv_threshold_left);

/// Q-hat(s) evaluated against a pooled Kaplan-Meier curve (left limits).
double weight_value(const WeightSpec& spec, const StepFunction& pooled_km, double s);

}  // namespace npsurv
