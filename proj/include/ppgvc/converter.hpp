// SPDX-License-Identifier: Apache-2.0
//
// Phoneme-by-phoneme posterior conversion with a single shared
// encoder-decoder. Output lengths are always imposed from outside.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppgvc/synthesizer.hpp"

namespace ppgvc {

struct SegmentPair {
  Matrix source;  // T_s x 5K, slice of R(x)
  Matrix target;  // T_t x 5K, slice of R(y)
  LabelSequence target_labels;
  int phoneme = 0;
  std::size_t utterance = 0;  // index into the parallel utterance list
};

/// Slices R(x) and R(y) by each side's own segmentation and pairs span i with span i.
std::vector<SegmentPair> make_segment_pairs(std::span<const ParallelUtterance> utterances,
                                            const RecognizerModel& recognizer);

struct ConverterConfig {
  int hidden = 32;
  int epochs = 100;
  AdaGradConfig optimizer;
  double init_range = 0.1;
  std::uint64_t seed = 1;
  double conversion_weight = 1.0;
  double ce_weight = 1.0;
  double synthesis_weight = 1.0;  // only used when a synthesizer is attached
  bool progress_inputs = true;    // see PosteriorEncoderDecoder
};

/// Weighted loss contributions; total is what the optimizer minimized.
struct ConversionLossReport {
  double conversion_term = 0.0;  // MSE between C(p_x) and p_y
  double ce_term = 0.0;          // grouped cross entropy against l^(y)
  double synthesis_term = 0.0;   // MSE between G(C(p_x)) and y; 0 without G
  double total = 0.0;
};

struct ConverterModel {
  PosteriorEncoderDecoder net;
  int classes = 0;

  static ConverterModel create(int classes, int hidden, bool progress_inputs = true);
};

/// Optional extra term of the fully joint regime.
struct SynthesisTerm {
  const SynthesizerModel* synthesizer = nullptr;  // kept frozen
  std::span<const Matrix> target_features;        // indexed by SegmentPair::utterance
};

struct ConverterTrainingResult {
  ConverterModel model;
  AdaGrad optimizer;
  std::vector<ConversionLossReport> epochs;
};

/// Loss of one utterance (its spans in order) with gradients accumulated into
/// `net`. `synth_scratch` (a copy of the frozen G) and `target_features` must be
/// given together to include the synthesis term.
ConversionLossReport converter_loss_and_gradient(PosteriorEncoderDecoder& net,
                                                 std::span<const SegmentPair* const> spans,
                                                 const ConverterConfig& config,
                                                 FrameRegressor* synth_scratch = nullptr,
                                                 const Matrix* target_features = nullptr);

/// One AdaGrad update per utterance over all of its spans.
ConverterTrainingResult train_converter(std::span<const SegmentPair> pairs,
                                        const ConverterConfig& config,
                                        const SynthesisTerm* synthesis = nullptr);

/// Converts span by span; span i emits exactly target_durations[i] frames.
PosteriorSequence convert_posteriors(const ConverterModel& model, const PosteriorSequence& source,
                                     const PhonemeSegmentation& source_segmentation,
                                     std::span<const int> target_durations);

}  // namespace ppgvc
