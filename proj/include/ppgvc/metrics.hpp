// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ppgvc/corpus.hpp"
#include "ppgvc/posterior.hpp"

namespace ppgvc {

/// Mel-cepstral distortion in dB: mean over frames of
/// (10 / ln 10) * sqrt(2 * sum_{d>=1} (c_d - c'_d)^2). Coefficient 0 is excluded.
/// With aligned = false the sequences are first aligned by DTW (squared
/// Euclidean over the included coefficients) and the mean runs over path pairs.
double mel_cepstral_distortion(const Matrix& reference, const Matrix& converted, bool aligned);

/// Mean over frames and groups of -sum p log p, in nats (0 log 0 = 0).
double mean_posterior_entropy(const PosteriorSequence& p);

/// Fraction of frames whose argmax in `group` matches the label; ties go to
/// the lowest class index.
double frame_accuracy(const PosteriorSequence& p, const LabelSequence& labels, int group);

}  // namespace ppgvc
