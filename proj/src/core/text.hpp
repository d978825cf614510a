#pragma once

#include <cstdio>
#include <string>

namespace antilimit {

// Round-trip decimal form used by every CSV writer.
inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace antilimit
