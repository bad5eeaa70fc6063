// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/jointtrain.hpp"

#include <algorithm>
#include <cmath>

namespace ppgvc {

const SynthesizerModel& JointRecSynResult::synthesizer(int speaker) const {
  for (const auto& g : synthesizers)
    if (g.speaker == speaker) return g;
  throw ValidationError("no jointly trained synthesizer for speaker " + std::to_string(speaker));
}

JointRecSynEpoch joint_rec_syn_loss_and_gradient(FrameClassifier& recognizer, FrameRegressor* synthesizer,
                                                 const Matrix& recognizer_input,
                                                 const SpeakerUtterance& utt, double ce_weight,
                                                 double reconstruction_weight) {
  const int classes = recognizer.arch().classes;
  const auto trace = recognizer.forward(recognizer_input);
  const LossResult ce = grouped_cross_entropy(trace.posteriors, utt.labels, classes);
  JointRecSynEpoch out;
  out.ce_term = ce_weight * ce.value;
  Matrix dlogits = ce_weight * ce.grad;
  if (synthesizer) {
    const auto strace = synthesizer->forward(trace.posteriors);
    const LossResult rec = mse_loss(strace.output, utt.features.frames);
    out.reconstruction_term = reconstruction_weight * rec.value;
    if (reconstruction_weight != 0.0) {
      const Matrix dprobs = synthesizer->backward(strace, reconstruction_weight * rec.grad);
      dlogits += grouped_softmax_backward(trace.posteriors, dprobs, classes);
    }
  }
  out.total = out.ce_term + out.reconstruction_term;
  recognizer.backward(trace, dlogits);
  return out;
}

JointRecSynResult train_joint_recognition_synthesis(std::span<const SpeakerUtterance> data,
                                                    int n_speakers, int classes,
                                                    const JointRecSynConfig& config) {
  if (data.empty()) throw ValidationError("joint training: empty corpus");
  if (n_speakers < 2) throw ValidationError("joint training: needs at least 2 speakers");
  if (config.recognizer.epochs < 1) throw ValidationError("joint training: epochs must be >= 1");
  const int dim = data.front().features.dim();

  JointRecSynResult result;
  result.recognizer = RecognizerModel::create(dim, n_speakers, classes, config.recognizer.hidden);
  init_recognizer_params(result.recognizer, config.recognizer);
  result.optimizer = AdaGrad(result.recognizer.net.params(), config.recognizer.optimizer);

  std::vector<AdaGrad> synth_opts;
  for (int spk : config.synthesis_speakers) {
    auto g = SynthesizerModel::create(classes, dim, config.synthesizer.hidden, spk);
    init_synthesizer_params(g, config.synthesizer);
    synth_opts.emplace_back(g.net.params(), config.synthesizer.optimizer);
    result.synthesizers.push_back(std::move(g));
  }
  auto synth_slot = [&](int speaker) -> int {
    const auto& s = config.synthesis_speakers;
    const auto it = std::find(s.begin(), s.end(), speaker);
    return it == s.end() ? -1 : static_cast<int>(it - s.begin());
  };

  std::vector<Matrix> inputs;
  for (const auto& utt : data) {
    utt.labels.validate(classes);
    inputs.push_back(result.recognizer.network_input(utt.features.frames, {utt.speaker, n_speakers}));
  }

  auto& rparams = result.recognizer.net.params();
  for (int epoch = 0; epoch < config.recognizer.epochs; ++epoch) {
    JointRecSynEpoch sum;
    for (std::size_t k : epoch_order(data.size(), config.recognizer.seed, epoch)) {
      const int slot = synth_slot(data[k].speaker);
      FrameRegressor* g = slot >= 0 ? &result.synthesizers[slot].net : nullptr;
      rparams.zero_grad();
      if (g) g->params().zero_grad();
      const auto r = joint_rec_syn_loss_and_gradient(result.recognizer.net, g, inputs[k], data[k],
                                                     config.ce_weight, config.reconstruction_weight);
      result.optimizer.step(rparams);
      if (g && config.reconstruction_weight != 0.0) synth_opts[slot].step(g->params());
      sum.ce_term += r.ce_term;
      sum.reconstruction_term += r.reconstruction_term;
      sum.total += r.total;
    }
    const double n = static_cast<double>(data.size());
    JointRecSynEpoch mean{sum.ce_term / n, sum.reconstruction_term / n, sum.total / n};
    if (!std::isfinite(mean.total)) throw Error("joint training: non-finite loss");
    result.epochs.push_back(mean);
  }

  for (std::size_t slot = 0; slot < result.synthesizers.size(); ++slot) {
    const int spk = config.synthesis_speakers[slot];
    std::vector<SynthesisExample> examples;
    for (const auto& utt : data) {
      if (utt.speaker != spk) continue;
      const auto p = estimate_posteriors(result.recognizer, utt.features, {spk, n_speakers});
      examples.push_back({p.probs, utt.features.frames});
    }
    if (examples.empty())
      throw ValidationError("joint training: no utterances for speaker " + std::to_string(spk));
    auto fitted = train_synthesizer_on(examples, classes, spk, config.synthesizer,
                                       &result.synthesizers[slot]);
    result.synthesizers[slot] = std::move(fitted.model);
    result.synthesizer_curves.push_back(std::move(fitted.loss_curve));
  }
  return result;
}

ConverterTrainingResult train_joint_full(std::span<const ParallelUtterance> train,
                                         const RecognizerModel& recognizer,
                                         const SynthesizerModel& synthesizer,
                                         const ConverterConfig& config) {
  const auto pairs = make_segment_pairs(train, recognizer);
  std::vector<Matrix> targets;
  targets.reserve(train.size());
  for (const auto& utt : train) targets.push_back(utt.target.features.frames);
  const SynthesisTerm term{&synthesizer, targets};
  return train_converter(pairs, config, &term);
}

}  // namespace ppgvc
