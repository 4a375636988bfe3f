#pragma once

#include <cstdio>
#include <string>

namespace coevo {

/// Locale-independent numeric formatting: 17 significant digits, round-trip safe.
inline std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string num(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

}  // namespace coevo
