// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/synthesizer.hpp"

#include <cmath>

namespace ppgvc {

SynthesizerModel SynthesizerModel::create(int classes, int feature_dim, int hidden, int speaker) {
  SynthesizerModel m;
  m.classes = classes;
  m.feature_dim = feature_dim;
  m.speaker = speaker;
  m.net = FrameRegressor({kContextGroups * classes, hidden, feature_dim});
  return m;
}

void init_synthesizer_params(SynthesizerModel& model, const SynthesizerConfig& config) {
  const auto seed = config.seed * 1000033ull + 101ull * static_cast<std::uint64_t>(model.speaker + 1);
  model.net.params().init_uniform(seed, config.init_range);
}

SynthesizerTrainingResult train_synthesizer(std::span<const SpeakerUtterance> speaker_data,
                                            const RecognizerModel* recognizer,
                                            const SynthesizerConfig& config) {
  if (!recognizer) throw ValidationError("train_synthesizer: a trained recognizer is required");
  if (speaker_data.empty()) throw ValidationError("train_synthesizer: no utterances");
  const int speaker = speaker_data.front().speaker;
  std::vector<SynthesisExample> examples;
  examples.reserve(speaker_data.size());
  for (const auto& utt : speaker_data) {
    if (utt.speaker != speaker)
      throw ValidationError("train_synthesizer: utterances from more than one speaker");
    const auto p = estimate_posteriors(*recognizer, utt.features, {speaker, recognizer->n_speakers});
    examples.push_back({p.probs, utt.features.frames});
  }
  return train_synthesizer_on(examples, recognizer->classes, speaker, config);
}

SynthesizerTrainingResult train_synthesizer_on(std::span<const SynthesisExample> examples,
                                               int classes, int speaker,
                                               const SynthesizerConfig& config,
                                               const SynthesizerModel* warm_start) {
  if (examples.empty()) throw ValidationError("train_synthesizer: no examples");
  if (config.epochs < 0) throw ValidationError("train_synthesizer: epochs must be >= 0");
  const int dim = static_cast<int>(examples.front().features.cols());
  SynthesizerTrainingResult result;
  if (warm_start) {
    result.model = *warm_start;
  } else {
    result.model = SynthesizerModel::create(classes, dim, config.hidden, speaker);
    init_synthesizer_params(result.model, config);
  }
  auto& params = result.model.net.params();
  result.optimizer = AdaGrad(params, config.optimizer);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t k : epoch_order(examples.size(), config.seed + 7919ull, epoch)) {
      params.zero_grad();
      const auto trace = result.model.net.forward(examples[k].posteriors);
      const LossResult mse = mse_loss(trace.output, examples[k].features);
      result.model.net.backward(trace, mse.grad);
      result.optimizer.step(params);
      total += mse.value;
    }
    const double mean = total / static_cast<double>(examples.size());
    if (!std::isfinite(mean)) throw Error("train_synthesizer: non-finite loss");
    result.loss_curve.push_back(mean);
  }
  return result;
}

FeatureSequence synthesize(const SynthesizerModel& model, const PosteriorSequence& p) {
  if (p.classes != model.classes) throw ShapeError("synthesize: posterior class count mismatch");
  FeatureSequence out;
  out.frame_shift_ms = p.frame_shift_ms;
  out.frames = model.net.predict(p.probs);
  return out;
}

}  // namespace ppgvc
