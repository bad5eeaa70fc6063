// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "ppgvc/converter.hpp"

namespace ppgvc {

struct JointRecSynConfig {
  RecognizerConfig recognizer;
  SynthesizerConfig synthesizer;
  double ce_weight = 1.0;
  double reconstruction_weight = 1.0;
  /// Speakers that get a speaker-dependent synthesizer in the auto-encoding term.
  std::vector<int> synthesis_speakers{kSourceSpeaker, kTargetSpeaker};
};

/// Weighted contributions, averaged over the utterances of one epoch.
struct JointRecSynEpoch {
  double ce_term = 0.0;
  double reconstruction_term = 0.0;
  double total = 0.0;
};

struct JointRecSynResult {
  RecognizerModel recognizer;
  AdaGrad optimizer;
  std::vector<SynthesizerModel> synthesizers;  // parallel to config.synthesis_speakers
  std::vector<JointRecSynEpoch> epochs;
  std::vector<std::vector<double>> synthesizer_curves;

  const SynthesizerModel& synthesizer(int speaker) const;
};

/// Loss of one utterance, ce_weight * L_C(l, R(x)) + reconstruction_weight * L_G(x, G(R(x))),
/// with gradients accumulated into R and (when non-null) G.
JointRecSynEpoch joint_rec_syn_loss_and_gradient(FrameClassifier& recognizer, FrameRegressor* synthesizer,
                                                 const Matrix& recognizer_input,
                                                 const SpeakerUtterance& utt, double ce_weight,
                                                 double reconstruction_weight);

/// Phase 1 trains R together with one G per synthesis speaker on the combined
/// loss, updating both. Phase 2 continues each G in the conventional manner on
/// the frozen, jointly trained R (fresh optimizer state).
JointRecSynResult train_joint_recognition_synthesis(std::span<const SpeakerUtterance> data,
                                                    int n_speakers, int classes,
                                                    const JointRecSynConfig& config);

/// Trains C on conversion + cross-entropy + synthesis terms with G frozen.
ConverterTrainingResult train_joint_full(std::span<const ParallelUtterance> train,
                                         const RecognizerModel& recognizer,
                                         const SynthesizerModel& synthesizer,
                                         const ConverterConfig& config);

}  // namespace ppgvc
