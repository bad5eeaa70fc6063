// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/converter.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <sstream>

namespace ppgvc {

namespace {

LabelSequence slice_labels(const LabelSequence& labels, int start, int end) {
  LabelSequence out;
  for (int g = 0; g < kContextGroups; ++g)
    out.groups[g].assign(labels.groups[g].begin() + start, labels.groups[g].begin() + end);
  return out;
}

}  // namespace

std::vector<SegmentPair> make_segment_pairs(std::span<const ParallelUtterance> utterances,
                                            const RecognizerModel& recognizer) {
  std::vector<SegmentPair> pairs;
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    const auto& utt = utterances[u];
    const auto& src_spans = utt.source.segmentation.spans;
    const auto& tgt_spans = utt.target.segmentation.spans;
    if (src_spans.size() != tgt_spans.size()) {
      std::ostringstream msg;
      msg << "utterance '" << utt.id << "': " << src_spans.size() << " source spans vs "
          << tgt_spans.size() << " target spans";
      throw ValidationError(msg.str());
    }
    const auto px = estimate_posteriors(recognizer, utt.source.features,
                                        {utt.source.speaker, recognizer.n_speakers});
    const auto py = estimate_posteriors(recognizer, utt.target.features,
                                        {utt.target.speaker, recognizer.n_speakers});
    for (std::size_t i = 0; i < src_spans.size(); ++i) {
      const Span& s = src_spans[i];
      const Span& t = tgt_spans[i];
      if (s.phoneme != t.phoneme)
        throw ValidationError("utterance '" + utt.id + "': span phonemes differ");
      SegmentPair pair;
      pair.source = px.probs.middleRows(s.start, s.length());
      pair.target = py.probs.middleRows(t.start, t.length());
      pair.target_labels = slice_labels(utt.target.labels, t.start, t.end);
      pair.phoneme = s.phoneme;
      pair.utterance = u;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

ConverterModel ConverterModel::create(int classes, int hidden, bool progress_inputs) {
  ConverterModel m;
  m.classes = classes;
  m.net = PosteriorEncoderDecoder({classes, hidden, progress_inputs});
  return m;
}

ConversionLossReport converter_loss_and_gradient(PosteriorEncoderDecoder& net,
                                                 std::span<const SegmentPair* const> spans,
                                                 const ConverterConfig& config,
                                                 FrameRegressor* synth_scratch,
                                                 const Matrix* target_features) {
  if (spans.empty()) throw ValidationError("converter loss: no spans");
  if ((synth_scratch == nullptr) != (target_features == nullptr))
    throw ValidationError("converter loss: synthesizer and target features go together");
  const int classes = net.arch().classes;
  const int width = net.posterior_dim();

  std::vector<PosteriorEncoderDecoder::Trace> traces;
  traces.reserve(spans.size());
  int total_frames = 0;
  for (const SegmentPair* sp : spans) {
    traces.push_back(net.forward(sp->source, sp->phoneme, sp->target));
    total_frames += static_cast<int>(sp->target.rows());
  }

  Matrix predicted(total_frames, width);
  Matrix reference(total_frames, width);
  LabelSequence labels;
  int row = 0;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto n = spans[k]->target.rows();
    predicted.middleRows(row, n) = traces[k].posteriors;
    reference.middleRows(row, n) = spans[k]->target;
    for (int g = 0; g < kContextGroups; ++g)
      labels.groups[g].insert(labels.groups[g].end(), spans[k]->target_labels.groups[g].begin(),
                              spans[k]->target_labels.groups[g].end());
    row += static_cast<int>(n);
  }

  const LossResult conv = mse_loss(predicted, reference);
  const LossResult ce = grouped_cross_entropy(predicted, labels, classes);
  Matrix dprobs = config.conversion_weight * conv.grad;

  ConversionLossReport report;
  report.conversion_term = config.conversion_weight * conv.value;
  report.ce_term = config.ce_weight * ce.value;

  if (synth_scratch) {
    synth_scratch->params().zero_grad();
    const auto strace = synth_scratch->forward(predicted);
    const LossResult syn = mse_loss(strace.output, *target_features);
    report.synthesis_term = config.synthesis_weight * syn.value;
    dprobs += synth_scratch->backward(strace, config.synthesis_weight * syn.grad);
  }
  report.total = report.conversion_term + report.ce_term + report.synthesis_term;

  const Matrix dlogits = grouped_softmax_backward(predicted, dprobs, classes) + config.ce_weight * ce.grad;
  row = 0;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto n = spans[k]->target.rows();
    net.backward(traces[k], dlogits.middleRows(row, n));
    row += static_cast<int>(n);
  }
  return report;
}

ConverterTrainingResult train_converter(std::span<const SegmentPair> pairs,
                                        const ConverterConfig& config,
                                        const SynthesisTerm* synthesis) {
  if (pairs.empty()) throw ValidationError("train_converter: no segment pairs");
  if (config.epochs < 1) throw ValidationError("train_converter: epochs must be >= 1");
  const int width = static_cast<int>(pairs.front().source.cols());
  if (width % kContextGroups != 0) throw ShapeError("train_converter: bad posterior width");
  const int classes = width / kContextGroups;

  // Group spans by utterance, keeping span order.
  std::map<std::size_t, std::vector<const SegmentPair*>> grouped;
  for (const auto& p : pairs) grouped[p.utterance].push_back(&p);
  std::vector<std::pair<std::size_t, std::vector<const SegmentPair*>>> utts(grouped.begin(),
                                                                           grouped.end());

  std::optional<FrameRegressor> scratch;
  if (synthesis) {
    if (!synthesis->synthesizer) throw ValidationError("train_converter: synthesis term lacks G");
    for (const auto& [u, spans] : utts)
      if (u >= synthesis->target_features.size())
        throw ValidationError("train_converter: missing target features for an utterance");
    scratch = synthesis->synthesizer->net;
  }

  ConverterTrainingResult result{ConverterModel::create(classes, config.hidden, config.progress_inputs), {}, {}};
  auto& params = result.model.net.params();
  params.init_uniform(config.seed * 1000081ull + 303ull, config.init_range);
  result.optimizer = AdaGrad(params, config.optimizer);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    ConversionLossReport sum;
    for (std::size_t k : epoch_order(utts.size(), config.seed + 104729ull, epoch)) {
      const auto& [u, spans] = utts[k];
      params.zero_grad();
      const auto r = converter_loss_and_gradient(
          result.model.net, spans, config, scratch ? &*scratch : nullptr,
          synthesis ? &synthesis->target_features[u] : nullptr);
      result.optimizer.step(params);
      sum.conversion_term += r.conversion_term;
      sum.ce_term += r.ce_term;
      sum.synthesis_term += r.synthesis_term;
      sum.total += r.total;
    }
    const double n = static_cast<double>(utts.size());
    ConversionLossReport mean{sum.conversion_term / n, sum.ce_term / n, sum.synthesis_term / n,
                              sum.total / n};
    if (!std::isfinite(mean.total)) throw Error("train_converter: non-finite loss");
    result.epochs.push_back(mean);
  }
  return result;
}

PosteriorSequence convert_posteriors(const ConverterModel& model, const PosteriorSequence& source,
                                     const PhonemeSegmentation& source_segmentation,
                                     std::span<const int> target_durations) {
  const auto& spans = source_segmentation.spans;
  if (target_durations.size() != spans.size()) {
    std::ostringstream msg;
    msg << "convert_posteriors: " << target_durations.size() << " durations for " << spans.size()
        << " spans";
    throw ValidationError(msg.str());
  }
  source_segmentation.validate(source.length());
  int total = 0;
  for (int d : target_durations) {
    if (d < 1) throw ValidationError("convert_posteriors: durations must be >= 1");
    total += d;
  }
  PosteriorSequence out;
  out.classes = model.classes;
  out.frame_shift_ms = source.frame_shift_ms;
  out.probs.resize(total, source.probs.cols());
  int row = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i];
    out.probs.middleRows(row, target_durations[i]) =
        model.net.generate(source.probs.middleRows(s.start, s.length()), s.phoneme, target_durations[i]);
    row += target_durations[i];
  }
  return out;
}

}  // namespace ppgvc
