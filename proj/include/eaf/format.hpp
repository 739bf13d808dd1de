#pragma once

#include <cstdio>
#include <string>

namespace eaf {

/// Shortest-independent round-trip text for a double (17 significant digits).
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace eaf
