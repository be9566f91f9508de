#pragma once

#include <charconv>
#include <string>

namespace conley {

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace conley
