// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppgvc/recognizer.hpp"

namespace ppgvc {

struct SynthesizerConfig {
  int hidden = 32;
  int epochs = 100;
  AdaGradConfig optimizer;
  double init_range = 0.1;
  std::uint64_t seed = 1;
};

/// Speaker-dependent regressor from concatenated 5-group posteriors to
/// (normalized) speech parameters.
struct SynthesizerModel {
  FrameRegressor net;
  int classes = 0;
  int feature_dim = 0;
  int speaker = kTargetSpeaker;

  static SynthesizerModel create(int classes, int feature_dim, int hidden, int speaker);
};

struct SynthesisExample {
  Matrix posteriors;  // T x 5K
  Matrix features;    // T x D
};

struct SynthesizerTrainingResult {
  SynthesizerModel model;
  AdaGrad optimizer;
  std::vector<double> loss_curve;  // mean MSE per epoch
};

void init_synthesizer_params(SynthesizerModel& model, const SynthesizerConfig& config);

/// Computes p_y = R(y) with R frozen, then fits G on (p_y, y). All utterances
/// must belong to one speaker.
SynthesizerTrainingResult train_synthesizer(std::span<const SpeakerUtterance> speaker_data,
                                            const RecognizerModel* recognizer,
                                            const SynthesizerConfig& config);

/// Fits G on precomputed pairs. With `warm_start`, training continues from
/// its parameters (fresh optimizer state); otherwise G is freshly initialized.
SynthesizerTrainingResult train_synthesizer_on(std::span<const SynthesisExample> examples,
                                               int classes, int speaker,
                                               const SynthesizerConfig& config,
                                               const SynthesizerModel* warm_start = nullptr);

/// Length-preserving; output is in the normalized feature space.
FeatureSequence synthesize(const SynthesizerModel& model, const PosteriorSequence& p);

}  // namespace ppgvc
