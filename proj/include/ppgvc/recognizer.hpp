// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppgvc/corpus.hpp"
#include "ppgvc/networks.hpp"
#include "ppgvc/posterior.hpp"

namespace ppgvc {

struct SpeakerCode {
  int speaker = 0;
  int n_speakers = 2;

  Vector one_hot() const;
};

/// First-order deltas by symmetric difference over +-1 frame, edges replicated.
Matrix delta_features(const Matrix& frames);

struct RecognizerConfig {
  int hidden = 32;
  int epochs = 200;
  AdaGradConfig optimizer;
  double init_range = 0.1;
  std::uint64_t seed = 1;
};

/// Speaker-independent frame classifier. Input per frame: [x, delta x, speaker code].
struct RecognizerModel {
  FrameClassifier net;
  int feature_dim = 0;
  int n_speakers = 0;
  int classes = 0;

  static RecognizerModel create(int feature_dim, int n_speakers, int classes, int hidden);
  Matrix network_input(const Matrix& frames, const SpeakerCode& code) const;
};

struct RecognizerTrainingResult {
  RecognizerModel model;
  AdaGrad optimizer;
  std::vector<double> loss_curve;  // mean cross entropy per epoch
};

/// Minimizes grouped cross entropy over every utterance of every speaker,
/// one AdaGrad update per utterance, seeded shuffling per epoch.
RecognizerTrainingResult train_recognizer(std::span<const SpeakerUtterance> data, int n_speakers,
                                          int classes, const RecognizerConfig& config);

/// Frame-synchronous: output length equals x's length.
PosteriorSequence estimate_posteriors(const RecognizerModel& model, const FeatureSequence& x,
                                      const SpeakerCode& code);

/// Helpers shared with joint training: initial parameters and per-epoch order.
void init_recognizer_params(RecognizerModel& model, const RecognizerConfig& config);
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

}  // namespace ppgvc
