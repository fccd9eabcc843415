#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace bread {

// All densities and weights in this toolkit are natural logarithms (nats).
// -infinity stands for log(0); NaN is never allowed to escape.

inline constexpr double log_zero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double v) { return std::isinf(v) && v < 0.0; }

// User-supplied log densities occasionally produce NaN (e.g. 0 * inf in a
// badly parameterized tail). Treat those points as zero density, the same
// way an MH step treats a zero-density proposal, and warn once.
inline double sanitize_log_density(double v) {
  if (std::isnan(v)) {
    static bool warned = false;
    if (!warned) {
      warned = true;
      std::fprintf(stderr, "[bread] warning: NaN log-density mapped to -inf\n");
    }
    return log_zero;
  }
  return v;
}

inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = *std::max_element(values.begin(), values.end());
  if (is_log_zero(m)) return log_zero;  // all terms are log(0)
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

inline double log_sum_exp(std::initializer_list<double> values) {
  return log_sum_exp(std::span<const double>(values.begin(), values.size()));
}

inline double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_mean_exp: empty input");
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

inline double log_mean_exp(std::initializer_list<double> values) {
  return log_mean_exp(std::span<const double>(values.begin(), values.size()));
}

inline double log_add_exp(double a, double b) { return log_sum_exp({a, b}); }

}  // namespace bread
