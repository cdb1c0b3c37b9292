#pragma once

#include "steinshrink/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace steinshrink::detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// n!! for odd n >= -1 (returns 1 for n <= 0).
inline double double_factorial_odd(int n) {
  double value = 1.0;
  for (int k = n; k > 1; k -= 2) value *= k;
  return value;
}

inline double log_sum_exp(const std::vector<double>& terms) {
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

inline double parse_double(const std::string& text, const std::string& what) {
  const auto first = text.find_first_not_of(" \t");
  const auto last = text.find_last_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParameterError(what + ": empty value");
  const std::string trimmed = text.substr(first, last - first + 1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size())
    throw ParameterError(what + ": cannot parse '" + trimmed + "' as a number");
  return value;
}

}  // namespace steinshrink::detail
