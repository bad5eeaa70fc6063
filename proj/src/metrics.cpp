// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/metrics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ppgvc/align.hpp"

namespace ppgvc {

namespace {

double frame_mcd(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double sq = (a.tail(a.size() - 1) - b.tail(b.size() - 1)).squaredNorm();
  return 10.0 / std::numbers::ln10 * std::sqrt(2.0 * sq);
}

}  // namespace

double mel_cepstral_distortion(const Matrix& reference, const Matrix& converted, bool aligned) {
  if (reference.cols() < 2 || converted.cols() < 2)
    throw ValidationError("mcd: need at least 2 coefficients");
  if (reference.cols() != converted.cols()) throw ShapeError("mcd: coefficient counts differ");
  if (reference.rows() < 1 || converted.rows() < 1) throw ValidationError("mcd: empty sequence");
  double total = 0.0;
  if (aligned) {
    if (reference.rows() != converted.rows()) {
      std::ostringstream msg;
      msg << "mcd: aligned sequences differ in length (" << reference.rows() << " vs "
          << converted.rows() << ")";
      throw ShapeError(msg.str());
    }
    for (Eigen::Index t = 0; t < reference.rows(); ++t)
      total += frame_mcd(reference.row(t), converted.row(t));
    return total / static_cast<double>(reference.rows());
  }
  const auto n = reference.cols() - 1;
  const auto dtw = dtw_align(reference.rightCols(n), converted.rightCols(n));
  for (const auto& [i, j] : dtw.path.pairs) total += frame_mcd(reference.row(i), converted.row(j));
  return total / static_cast<double>(dtw.path.pairs.size());
}

double mean_posterior_entropy(const PosteriorSequence& p) {
  if (p.length() < 1) throw ValidationError("entropy: empty posterior sequence");
  double total = 0.0;
  for (Eigen::Index t = 0; t < p.probs.rows(); ++t) {
    for (Eigen::Index c = 0; c < p.probs.cols(); ++c) {
      const double v = p.probs(t, c);
      if (v > 0.0) total -= v * std::log(v);
    }
  }
  return total / static_cast<double>(p.probs.rows() * kContextGroups);
}

double frame_accuracy(const PosteriorSequence& p, const LabelSequence& labels, int group) {
  if (group < 0 || group >= kContextGroups) throw ValidationError("accuracy: bad group index");
  if (labels.length() != p.length()) throw ShapeError("accuracy: length mismatch");
  if (p.length() < 1) throw ValidationError("accuracy: empty sequence");
  const auto block = p.group(group);
  int hits = 0;
  for (Eigen::Index t = 0; t < block.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < block.cols(); ++c)
      if (block(t, c) > block(t, best)) best = c;
    if (best == labels.groups[group][t]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(p.length());
}

}  // namespace ppgvc
