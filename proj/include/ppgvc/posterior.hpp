// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ppgvc/common.hpp"

namespace ppgvc {

/// Context posteriorgram: T x (5 * classes), the five group distributions laid
/// out side by side in order prev-prev, prev, current, next, next-next.
struct PosteriorSequence {
  Matrix probs;
  int classes = 0;
  double frame_shift_ms = 5.0;

  int length() const { return static_cast<int>(probs.rows()); }
  auto group(int g) const { return probs.middleCols(g * classes, classes); }

  /// Largest |row sum - 1| over all frames and groups.
  double max_row_sum_error() const;
  /// Throws ValidationError if any group row is off by more than `tolerance`
  /// or an entry lies outside [0, 1].
  void validate(double tolerance = 1e-9) const;
};

}  // namespace ppgvc
