#include "dyntok/json_util.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace dyntok {

double round_sig6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return std::strtod(buf, nullptr);
}

}  // namespace dyntok
