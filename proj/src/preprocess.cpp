// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include <fftw3.h>

namespace ppgvc {

Matrix NormStats::apply(const Matrix& frames) const {
  if (frames.cols() != mean.size()) throw ShapeError("normalization: dimension mismatch");
  return (frames.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

Matrix NormStats::invert(const Matrix& frames) const {
  if (frames.cols() != mean.size()) throw ShapeError("denormalization: dimension mismatch");
  return (frames.array().rowwise() * stddev.transpose().array()).matrix().rowwise() +
         mean.transpose();
}

NormStats fit_norm_stats(std::span<const Matrix* const> sequences) {
  Eigen::Index dim = -1;
  double count = 0.0;
  for (const Matrix* m : sequences) {
    if (dim < 0) dim = m->cols();
    if (m->cols() != dim) throw ShapeError("normalization: sequences differ in dimension");
    count += static_cast<double>(m->rows());
  }
  if (count < 2.0) throw ValidationError("normalization needs at least 2 frames");
  Vector sum = Vector::Zero(dim);
  for (const Matrix* m : sequences) sum += m->colwise().sum().transpose();
  NormStats stats;
  stats.mean = sum / count;
  Vector sq = Vector::Zero(dim);
  for (const Matrix* m : sequences)
    sq += (m->rowwise() - stats.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  stats.stddev = (sq / count).array().sqrt().max(kStdFloor).matrix();
  return stats;
}

std::pair<Corpus, NormStats> normalize_features(const Corpus& corpus,
                                                std::optional<NormStats> stats) {
  if (!stats) {
    std::vector<const Matrix*> seqs;
    for (const auto& utt : corpus.train) {
      seqs.push_back(&utt.source.features.frames);
      seqs.push_back(&utt.target.features.frames);
      for (const auto& f : utt.fillers) seqs.push_back(&f.features.frames);
    }
    stats = fit_norm_stats(seqs);
  }
  Corpus out = corpus;
  auto apply = [&](SpeakerUtterance& s) { s.features.frames = stats->apply(s.features.frames); };
  for (auto* split : {&out.train, &out.eval}) {
    for (auto& utt : *split) {
      apply(utt.source);
      apply(utt.target);
      for (auto& f : utt.fillers) apply(f);
    }
  }
  return {std::move(out), *stats};
}

namespace {
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FeatureSequence smooth_trajectories(const FeatureSequence& seq, double cutoff_hz) {
  const double frame_rate = 1000.0 / seq.frame_shift_ms;
  const double nyquist = frame_rate / 2.0;
  if (!(cutoff_hz > 0.0 && cutoff_hz <= nyquist))
    throw ValidationError("smoothing cutoff must lie in (0, " + std::to_string(nyquist) + "] Hz");
  const int n = seq.length();
  const int bins = n / 2 + 1;

  std::vector<double> signal(n);
  std::vector<std::complex<double>> spectrum(bins);
  auto* freq = reinterpret_cast<fftw_complex*>(spectrum.data());
  fftw_plan forward;
  fftw_plan backward;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_r2c_1d(n, signal.data(), freq, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(n, freq, signal.data(), FFTW_ESTIMATE);
  }

  FeatureSequence out = seq;
  for (int d = 0; d < seq.dim(); ++d) {
    for (int t = 0; t < n; ++t) signal[t] = seq.frames(t, d);
    fftw_execute(forward);
    for (int k = 0; k < bins; ++k) {
      const double hz = k * frame_rate / n;
      if (hz > cutoff_hz * (1.0 + 1e-12)) spectrum[k] = 0.0;
    }
    fftw_execute(backward);
    for (int t = 0; t < n; ++t) out.frames(t, d) = signal[t] / n;
  }

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  return out;
}

SpeakerUtterance remove_silent_frames(const SpeakerUtterance& utt, double removal_fraction,
                                      int silence_index, std::uint64_t seed) {
  if (!(removal_fraction >= 0.0 && removal_fraction <= 1.0))
    throw ValidationError("removal fraction must lie in [0, 1]");
  const auto& current = utt.labels.current();
  const int n_frames = utt.features.length();
  std::vector<int> silent;
  for (int t = 0; t < n_frames; ++t)
    if (current[t] == silence_index) silent.push_back(t);
  const int n_silent = static_cast<int>(silent.size());
  const int n_drop = static_cast<int>(std::floor(removal_fraction * n_silent + 1e-9));
  if (n_drop == 0) return utt;

  std::vector<bool> keep(n_frames, true);
  for (int t : silent) keep[t] = false;
  const int n_keep = n_silent - n_drop;
  if (n_keep > 0) {
    std::mt19937_64 rng(seed);
    const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (int i = 0; i < n_keep; ++i) {
      const auto pos = static_cast<int>(std::floor((i + offset) * n_silent / n_keep));
      keep[silent[std::min(pos, n_silent - 1)]] = true;
    }
  }

  std::vector<int> kept;
  for (int t = 0; t < n_frames; ++t)
    if (keep[t]) kept.push_back(t);
  const int n_out = static_cast<int>(kept.size());

  SpeakerUtterance out;
  out.speaker = utt.speaker;
  out.features.frame_shift_ms = utt.features.frame_shift_ms;
  out.features.frames.resize(n_out, utt.features.dim());
  if (utt.features.log_f0) out.features.log_f0 = Vector(n_out);
  if (utt.features.aperiodicity) out.features.aperiodicity = Vector(n_out);
  for (int i = 0; i < n_out; ++i) {
    out.features.frames.row(i) = utt.features.frames.row(kept[i]);
    if (out.features.log_f0) (*out.features.log_f0)(i) = (*utt.features.log_f0)(kept[i]);
    if (out.features.aperiodicity)
      (*out.features.aperiodicity)(i) = (*utt.features.aperiodicity)(kept[i]);
    for (int g = 0; g < kContextGroups; ++g) out.labels.groups[g].push_back(utt.labels.groups[g][kept[i]]);
  }
  int cursor = 0;
  for (const auto& span : utt.segmentation.spans) {
    const int survivors =
        static_cast<int>(std::count(keep.begin() + span.start, keep.begin() + span.end, true));
    if (survivors == 0) continue;
    if (!out.segmentation.spans.empty() && out.segmentation.spans.back().phoneme == span.phoneme) {
      out.segmentation.spans.back().end += survivors;
    } else {
      out.segmentation.spans.push_back({span.phoneme, cursor, cursor + survivors});
    }
    cursor += survivors;
  }
  return out;
}

F0Stats fit_f0_stats(std::span<const Vector* const> tracks) {
  double sum = 0.0;
  double sq = 0.0;
  double n = 0.0;
  for (const Vector* track : tracks) {
    for (Eigen::Index t = 0; t < track->size(); ++t) {
      const double v = (*track)(t);
      if (v == kUnvoicedLogF0) continue;
      sum += v;
      sq += v * v;
      n += 1.0;
    }
  }
  if (n < 2.0) throw ValidationError("F0 statistics need at least 2 voiced frames");
  F0Stats stats;
  stats.mean = sum / n;
  stats.stddev = std::sqrt(std::max(sq / n - stats.mean * stats.mean, 0.0));
  if (!(stats.stddev > 0.0)) throw ValidationError("voiced log-F0 has zero variance");
  return stats;
}

}  // namespace ppgvc
