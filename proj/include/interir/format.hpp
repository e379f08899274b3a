#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace interir {

/// Shortest decimal text that round-trips to the same double; "inf" / "nan"
/// for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace interir
