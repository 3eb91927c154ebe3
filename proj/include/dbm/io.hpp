#pragma once

#include <cstdio>
#include <string>

namespace dbm {

// Round-trip text form used in every CSV/JSON artifact.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short human-readable form for summary columns.
inline std::string fmt_human(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace dbm
