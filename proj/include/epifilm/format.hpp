#pragma once

#include <cstdio>
#include <string>

namespace epifilm {

/// Round-trippable decimal text (17 significant digits).
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace epifilm
