// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "ppgvc/corpus.hpp"

namespace ppgvc {

inline constexpr double kStdFloor = 1e-8;

/// Per-dimension z-scoring statistics.
struct NormStats {
  Vector mean;
  Vector stddev;

  Matrix apply(const Matrix& frames) const;
  Matrix invert(const Matrix& frames) const;
};

/// Population mean/std over every frame of every sequence; std floored at kStdFloor.
NormStats fit_norm_stats(std::span<const Matrix* const> sequences);

/// Fits statistics on all speakers' training frames (unless `stats` is given)
/// and applies them to train and eval.
std::pair<Corpus, NormStats> normalize_features(const Corpus& corpus,
                                                std::optional<NormStats> stats = std::nullopt);

/// Low-pass filters every feature dimension along time by zeroing DFT bins
/// above `cutoff_hz` (modulation frequency). cutoff must lie in (0, Nyquist].
FeatureSequence smooth_trajectories(const FeatureSequence& seq, double cutoff_hz);

/// Drops floor(fraction * n_silent) frames whose current-phoneme label is
/// silence. Kept silent frames are spread by a seeded stride; spans that lose
/// every frame disappear from the segmentation, labels of surviving frames are
/// unchanged.
SpeakerUtterance remove_silent_frames(const SpeakerUtterance& utt, double removal_fraction,
                                      int silence_index, std::uint64_t seed);

/// Voiced log-F0 moments of a speaker.
struct F0Stats {
  double mean = 0.0;
  double stddev = 1.0;
};

F0Stats fit_f0_stats(std::span<const Vector* const> tracks);

}  // namespace ppgvc
