#pragma once

// Pair-score arithmetic shared by the loss code and the bulk scorer so both
// produce bit-identical values.

#include <algorithm>
#include <cmath>

namespace triplh::detail {

/// -d_P(sx x, sy y) given clip scales, clipped squared norms and x.y of the
/// unclipped vectors.
inline double poincare_neg_distance(double sx, double cx_sq, double sy, double cy_sq, double xy) {
  const double diff_sq = std::max(0.0, cx_sq + cy_sq - 2.0 * sx * sy * xy);
  const double t = 1.0 + 2.0 * diff_sq / ((1.0 - cx_sq) * (1.0 - cy_sq));
  return -std::acosh(std::max(1.0, t));
}

}  // namespace triplh::detail
