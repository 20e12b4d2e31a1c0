#pragma once

#include <cstdio>
#include <string>

namespace wfopt {

// 17 significant digits: decimal text round-trips IEEE doubles exactly.
inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace wfopt
