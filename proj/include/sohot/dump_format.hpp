#pragma once

#include "sohot/types.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace sohot {

// Shared tree-dump line grammar:
//   I d=<depth> f=<feature> th=<threshold> |w|=<l2 norm>
//   L d=<depth> p=[<probs, 4 decimals>] n=<samples seen>
// with two-space indentation per depth level.

inline void dump_internal_line(std::ostream& os, int depth, int feature, double threshold,
                               double weight_norm) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "I d=%d f=%d th=%.6g |w|=%.4f", depth, feature, threshold,
                weight_norm);
  os << std::string(2 * static_cast<std::size_t>(depth), ' ') << buf << '\n';
}

inline void dump_leaf_line(std::ostream& os, int depth, const Vector& probs, long samples_seen) {
  os << std::string(2 * static_cast<std::size_t>(depth), ' ') << "L d=" << depth << " p=[";
  char buf[32];
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.4f", probs[i]);
    os << (i > 0 ? ", " : "") << buf;
  }
  os << "] n=" << samples_seen << '\n';
}

}  // namespace sohot
