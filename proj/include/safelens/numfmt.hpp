#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace safelens {

/// Shortest decimal text that round-trips to the same double; "nan" for NaN.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace safelens
