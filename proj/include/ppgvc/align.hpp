// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "ppgvc/common.hpp"
#include "ppgvc/preprocess.hpp"

namespace ppgvc {

enum class LocalDistance { kSquaredEuclidean, kEuclidean };

/// Monotone alignment path; steps are (1,0), (0,1) or (1,1).
struct WarpPath {
  std::vector<std::pair<int, int>> pairs;

  /// Throws ValidationError unless the path is a valid warp for lengths (len_a, len_b).
  void validate(int len_a, int len_b) const;
};

struct DtwResult {
  WarpPath path;
  double cost = 0.0;
};

/// Rows of `a` and `b` are frames. Minimizes summed local distance; during
/// backtrace ties prefer the diagonal, then (1,0), then (0,1).
DtwResult dtw_align(const Matrix& a, const Matrix& b,
                    LocalDistance distance = LocalDistance::kSquaredEuclidean);

enum class WarpSide {
  kAToB,  // seq is indexed like A; output has B's length
  kBToA,  // seq is indexed like B; output has A's length
};

/// Output frame j copies the sequence frame at the first path partner of j.
Matrix apply_warp(const Matrix& seq, const WarpPath& path, WarpSide side);
Vector apply_warp(const Vector& seq, const WarpPath& path, WarpSide side);

/// Voiced frames: (x - mu_s) / sigma_s * sigma_t + mu_t; unvoiced sentinels pass through.
Vector transform_f0(const Vector& source_logf0, const F0Stats& source, const F0Stats& target);

}  // namespace ppgvc
