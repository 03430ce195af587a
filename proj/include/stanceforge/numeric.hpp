// Percentage rounding and fixed-point formatting shared by the reports.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace stanceforge {

/// Rounds half away from zero at `decimals` places. A relative nudge of 1e-9
/// absorbs binary representation error, so 80.65 rounds to 80.7 even though
/// the nearest double is slightly below it.
inline double round_half_up(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double y = std::fabs(x) * scale;
  const double r = std::floor(y + 0.5 + 1e-9 * std::max(1.0, y)) / scale;
  return std::signbit(x) ? -r : r;
}

inline std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_up(x, decimals));
  return buf;
}

/// 1174 -> "1,174".
inline std::string format_count(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

}  // namespace stanceforge
