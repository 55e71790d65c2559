#pragma once

#include <cstdio>
#include <string>

namespace qgwnd {

/// Round-trip decimal text for a double, identical across runs and platforms
/// with the same libc.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace qgwnd
