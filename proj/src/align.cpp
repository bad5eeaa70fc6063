// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ppgvc {

void WarpPath::validate(int len_a, int len_b) const {
  if (pairs.empty()) throw ValidationError("warp path is empty");
  if (pairs.front() != std::pair{0, 0}) throw ValidationError("warp path must start at (0, 0)");
  if (pairs.back() != std::pair{len_a - 1, len_b - 1}) {
    std::ostringstream msg;
    msg << "warp path must end at (" << len_a - 1 << ", " << len_b - 1 << ")";
    throw ValidationError(msg.str());
  }
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const int di = pairs[k].first - pairs[k - 1].first;
    const int dj = pairs[k].second - pairs[k - 1].second;
    if (di < 0 || dj < 0 || di > 1 || dj > 1 || (di == 0 && dj == 0))
      throw ValidationError("warp path has an invalid step at position " + std::to_string(k));
  }
}

DtwResult dtw_align(const Matrix& a, const Matrix& b, LocalDistance distance) {
  if (a.rows() < 1 || b.rows() < 1) throw ValidationError("dtw: sequences must be non-empty");
  if (a.cols() != b.cols()) throw ValidationError("dtw: frame dimensions differ");
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  constexpr double inf = std::numeric_limits<double>::infinity();

  Matrix local(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double sq = (a.row(i) - b.row(j)).squaredNorm();
      local(i, j) = distance == LocalDistance::kSquaredEuclidean ? sq : std::sqrt(sq);
    }

  Matrix acc = Matrix::Constant(n, m, inf);
  acc(0, 0) = local(0, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == 0 && j == 0) continue;
      double best = inf;
      if (i > 0 && j > 0) best = acc(i - 1, j - 1);
      if (i > 0) best = std::min(best, acc(i - 1, j));
      if (j > 0) best = std::min(best, acc(i, j - 1));
      acc(i, j) = best + local(i, j);
    }
  }

  DtwResult result;
  int i = n - 1;
  int j = m - 1;
  result.path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double diag = acc(i - 1, j - 1);
      const double up = acc(i - 1, j);
      const double left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    result.path.pairs.emplace_back(i, j);
  }
  std::reverse(result.path.pairs.begin(), result.path.pairs.end());

  // Summing along the path keeps cost and path consistent by construction.
  for (const auto& [pi, pj] : result.path.pairs) result.cost += local(pi, pj);
  return result;
}

namespace {

// partner[k] = first index on the source side matched to output index k.
std::vector<int> first_partners(const WarpPath& path, WarpSide side, int seq_len) {
  const int len_a = path.pairs.back().first + 1;
  const int len_b = path.pairs.back().second + 1;
  path.validate(len_a, len_b);
  const int own = side == WarpSide::kAToB ? len_a : len_b;
  const int other = side == WarpSide::kAToB ? len_b : len_a;
  if (seq_len != own) {
    std::ostringstream msg;
    msg << "apply_warp: sequence has " << seq_len << " frames, path expects " << own;
    throw ValidationError(msg.str());
  }
  std::vector<int> partner(other, -1);
  for (const auto& [i, j] : path.pairs) {
    const int out = side == WarpSide::kAToB ? j : i;
    const int in = side == WarpSide::kAToB ? i : j;
    if (partner[out] < 0) partner[out] = in;
  }
  return partner;
}

}  // namespace

Matrix apply_warp(const Matrix& seq, const WarpPath& path, WarpSide side) {
  const auto partner = first_partners(path, side, static_cast<int>(seq.rows()));
  Matrix out(static_cast<Eigen::Index>(partner.size()), seq.cols());
  for (std::size_t k = 0; k < partner.size(); ++k) out.row(k) = seq.row(partner[k]);
  return out;
}

Vector apply_warp(const Vector& seq, const WarpPath& path, WarpSide side) {
  const auto partner = first_partners(path, side, static_cast<int>(seq.size()));
  Vector out(static_cast<Eigen::Index>(partner.size()));
  for (std::size_t k = 0; k < partner.size(); ++k) out(k) = seq(partner[k]);
  return out;
}

Vector transform_f0(const Vector& source_logf0, const F0Stats& source, const F0Stats& target) {
  if (!(source.stddev > 0.0)) throw ValidationError("transform_f0: source stddev must be positive");
  Vector out = source_logf0;
  for (Eigen::Index t = 0; t < out.size(); ++t) {
    if (out(t) == kUnvoicedLogF0) continue;
    out(t) = (out(t) - source.mean) / source.stddev * target.stddev + target.mean;
  }
  return out;
}

}  // namespace ppgvc
