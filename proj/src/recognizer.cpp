// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ppgvc {

double PosteriorSequence::max_row_sum_error() const {
  double worst = 0.0;
  for (int g = 0; g < kContextGroups; ++g) {
    const Vector sums = group(g).rowwise().sum();
    for (Eigen::Index t = 0; t < sums.size(); ++t) worst = std::max(worst, std::abs(sums(t) - 1.0));
  }
  return worst;
}

void PosteriorSequence::validate(double tolerance) const {
  if (classes < 1 || probs.cols() != kContextGroups * classes)
    throw ValidationError("posterior sequence has the wrong width");
  if (!probs.allFinite() || probs.minCoeff() < 0.0 || probs.maxCoeff() > 1.0)
    throw ValidationError("posterior entries must lie in [0, 1]");
  if (max_row_sum_error() > tolerance) throw ValidationError("posterior rows are not normalized");
}

Vector SpeakerCode::one_hot() const {
  if (speaker < 0 || speaker >= n_speakers) throw ValidationError("speaker code out of range");
  Vector v = Vector::Zero(n_speakers);
  v(speaker) = 1.0;
  return v;
}

Matrix delta_features(const Matrix& frames) {
  const Eigen::Index T = frames.rows();
  Matrix d(T, frames.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Index prev = std::max<Eigen::Index>(t - 1, 0);
    const Eigen::Index next = std::min<Eigen::Index>(t + 1, T - 1);
    d.row(t) = 0.5 * (frames.row(next) - frames.row(prev));
  }
  return d;
}

RecognizerModel RecognizerModel::create(int feature_dim, int n_speakers, int classes, int hidden) {
  if (n_speakers < 1) throw ValidationError("recognizer needs at least one speaker");
  RecognizerModel m;
  m.feature_dim = feature_dim;
  m.n_speakers = n_speakers;
  m.classes = classes;
  m.net = FrameClassifier({2 * feature_dim + n_speakers, hidden, classes});
  return m;
}

Matrix RecognizerModel::network_input(const Matrix& frames, const SpeakerCode& code) const {
  if (frames.cols() != feature_dim) {
    std::ostringstream msg;
    msg << "recognizer: expected feature dim " << feature_dim << ", got " << frames.cols();
    throw ShapeError(msg.str());
  }
  if (code.n_speakers != n_speakers) throw ShapeError("recognizer: speaker code width mismatch");
  Matrix in(frames.rows(), 2 * feature_dim + n_speakers);
  in.leftCols(feature_dim) = frames;
  in.middleCols(feature_dim, feature_dim) = delta_features(frames);
  in.rightCols(n_speakers).rowwise() = code.one_hot().transpose();
  return in;
}

void init_recognizer_params(RecognizerModel& model, const RecognizerConfig& config) {
  model.net.params().init_uniform(config.seed * 1000003ull + 11ull, config.init_range);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(epoch) + 1);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

RecognizerTrainingResult train_recognizer(std::span<const SpeakerUtterance> data, int n_speakers,
                                          int classes, const RecognizerConfig& config) {
  if (data.empty()) throw ValidationError("train_recognizer: empty corpus");
  if (n_speakers < 2) throw ValidationError("train_recognizer: needs at least 2 speakers");
  if (config.epochs < 1) throw ValidationError("train_recognizer: epochs must be >= 1");
  const int dim = data.front().features.dim();

  RecognizerTrainingResult result{RecognizerModel::create(dim, n_speakers, classes, config.hidden),
                                  {}, {}};
  auto& model = result.model;
  init_recognizer_params(model, config);
  result.optimizer = AdaGrad(model.net.params(), config.optimizer);

  std::vector<Matrix> inputs;
  inputs.reserve(data.size());
  for (const auto& utt : data) {
    utt.labels.validate(classes);
    if (utt.labels.length() != utt.features.length())
      throw ValidationError("train_recognizer: labels and features differ in length");
    inputs.push_back(model.network_input(utt.features.frames, {utt.speaker, n_speakers}));
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t k : epoch_order(data.size(), config.seed, epoch)) {
      auto& params = model.net.params();
      params.zero_grad();
      const auto trace = model.net.forward(inputs[k]);
      const LossResult ce = grouped_cross_entropy(trace.posteriors, data[k].labels, classes);
      model.net.backward(trace, ce.grad);
      result.optimizer.step(params);
      total += ce.value;
    }
    const double mean = total / static_cast<double>(data.size());
    if (!std::isfinite(mean)) throw Error("train_recognizer: non-finite loss");
    result.loss_curve.push_back(mean);
  }
  return result;
}

PosteriorSequence estimate_posteriors(const RecognizerModel& model, const FeatureSequence& x,
                                      const SpeakerCode& code) {
  PosteriorSequence p;
  p.classes = model.classes;
  p.frame_shift_ms = x.frame_shift_ms;
  p.probs = model.net.predict(model.network_input(x.frames, code));
  return p;
}

}  // namespace ppgvc
