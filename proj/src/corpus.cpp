// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace ppgvc {

PhonemeInventory::PhonemeInventory(std::vector<std::string> phonemes, std::string silence_id)
    : phonemes_(std::move(phonemes)) {
  if (phonemes_.size() < 3)
    throw ValidationError("phoneme inventory needs at least 3 phonemes");
  std::set<std::string> seen;
  for (const auto& p : phonemes_) {
    if (p.empty() || p.find_first_of(" \t\n,") != std::string::npos)
      throw ValidationError("invalid phoneme identifier '" + p + "'");
    if (!seen.insert(p).second) throw ValidationError("duplicate phoneme '" + p + "'");
  }
  auto it = std::find(phonemes_.begin(), phonemes_.end(), silence_id);
  if (it == phonemes_.end())
    throw ValidationError("silence id '" + silence_id + "' is not in the inventory");
  silence_index_ = static_cast<int>(it - phonemes_.begin());
}

int PhonemeInventory::index_of(const std::string& name) const {
  auto it = std::find(phonemes_.begin(), phonemes_.end(), name);
  if (it == phonemes_.end()) throw ValidationError("unknown phoneme '" + name + "'");
  return static_cast<int>(it - phonemes_.begin());
}

void FeatureSequence::validate() const {
  if (frames.rows() < 1) throw ValidationError("feature sequence has no frames");
  if (!frames.allFinite()) throw ValidationError("feature sequence has non-finite values");
  if (!(frame_shift_ms > 0.0)) throw ValidationError("frame shift must be positive");
  if (log_f0 && log_f0->size() != frames.rows())
    throw ValidationError("log-F0 track length differs from frame count");
  if (aperiodicity && aperiodicity->size() != frames.rows())
    throw ValidationError("aperiodicity track length differs from frame count");
}

void LabelSequence::validate(int n_classes) const {
  const auto n = groups[0].size();
  for (const auto& g : groups) {
    if (g.size() != n) throw ValidationError("label groups have different lengths");
    for (int v : g)
      if (v < 0 || v >= n_classes) throw ValidationError("label index out of range");
  }
}

std::vector<int> PhonemeSegmentation::durations() const {
  std::vector<int> out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(s.length());
  return out;
}

std::vector<int> PhonemeSegmentation::phonemes() const {
  std::vector<int> out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(s.phoneme);
  return out;
}

void PhonemeSegmentation::validate(int n_frames) const {
  int cursor = 0;
  for (const auto& s : spans) {
    if (s.start != cursor) {
      std::ostringstream msg;
      msg << "segmentation gap or overlap at frame " << cursor;
      throw ValidationError(msg.str());
    }
    if (s.length() < 1) throw ValidationError("segmentation contains an empty span");
    cursor = s.end;
  }
  if (cursor != n_frames) {
    std::ostringstream msg;
    msg << "segmentation covers " << cursor << " frames, expected " << n_frames;
    throw ValidationError(msg.str());
  }
}

LabelSequence labels_from_segmentation(const PhonemeSegmentation& seg, int silence_index) {
  LabelSequence labels;
  const int n_spans = static_cast<int>(seg.spans.size());
  for (int i = 0; i < n_spans; ++i) {
    for (int g = 0; g < kContextGroups; ++g) {
      const int k = i + g - 2;
      const int phoneme = (k < 0 || k >= n_spans) ? silence_index : seg.spans[k].phoneme;
      labels.groups[g].insert(labels.groups[g].end(), seg.spans[i].length(), phoneme);
    }
  }
  return labels;
}

void CorpusSpec::validate() const {
  if (n_train_utterances < 1 || n_eval_utterances < 1)
    throw ValidationError("utterance counts must be at least 1");
  if (feature_dim < 2) throw ValidationError("feature_dim must be at least 2");
  if (!(duration_scale > 0.0)) throw ValidationError("duration_scale must be positive");
  if (!(duration_jitter >= 0.0 && duration_jitter < 1.0))
    throw ValidationError("duration_jitter must be in [0, 1)");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
  if (!(phonetic_offset_scale >= 0.0))
    throw ValidationError("phonetic_offset_scale must be non-negative");
  if (min_phonemes < 1 || max_phonemes < min_phonemes)
    throw ValidationError("invalid phoneme count range");
  if (min_duration < 1 || max_duration < min_duration)
    throw ValidationError("invalid duration range");
  if (!(frame_shift_ms > 0.0)) throw ValidationError("frame_shift_ms must be positive");
  if (n_filler_speakers < 0) throw ValidationError("n_filler_speakers must be non-negative");
  if (!(coarticulation_ms >= 0.0)) throw ValidationError("coarticulation_ms must be non-negative");
}

namespace {

// Per-speaker emission parameters.
struct SpeakerProfile {
  Matrix anchors;  // K x D
  Matrix slopes;   // K x D, linear intra-phoneme drift
  Matrix bumps;    // K x D, mid-phoneme excursion
  double duration_scale = 1.0;
  double logf0_mean = 0.0;
  double logf0_range = 0.0;
};

Vector random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  do {
    for (int d = 0; d < dim; ++d) v(d) = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

SpeakerProfile derive_speaker(const SpeakerProfile& base, std::mt19937_64& rng,
                              double offset_scale, double duration_scale, double logf0_mean) {
  SpeakerProfile out = base;
  for (int p = 0; p < base.anchors.rows(); ++p) {
    const Vector dir = random_unit(rng, static_cast<int>(base.anchors.cols()));
    out.anchors.row(p) += offset_scale * dir.transpose();
  }
  out.duration_scale = duration_scale;
  out.logf0_mean = logf0_mean;
  return out;
}

// Gaussian blur along time (sigma in frames, edges replicated): neighbouring
// articulations bleed into each other over a fixed span of time.
Matrix coarticulate(const Matrix& frames, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) sum += kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (auto& w : kernel) w /= sum;
  const int T = static_cast<int>(frames.rows());
  Matrix out = Matrix::Zero(T, frames.cols());
  for (int t = 0; t < T; ++t)
    for (int k = -radius; k <= radius; ++k) out.row(t) += kernel[k + radius] * frames.row(std::clamp(t + k, 0, T - 1));
  return out;
}

SpeakerUtterance render(const SpeakerProfile& spk, int speaker_id, const std::vector<int>& phonemes,
                        const std::vector<int>& durations, const CorpusSpec& spec,
                        std::mt19937_64& rng) {
  const int silence = spec.inventory.silence_index();
  const int dim = spec.feature_dim;
  SpeakerUtterance utt;
  utt.speaker = speaker_id;
  int cursor = 0;
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    utt.segmentation.spans.push_back({phonemes[i], cursor, cursor + durations[i]});
    cursor += durations[i];
  }
  const int total = cursor;
  Matrix frames(total, dim);
  Matrix jitter(total, dim);
  Vector logf0(total);
  Vector ap(total);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& span : utt.segmentation.spans) {
    const int n = span.length();
    const int p = span.phoneme;
    for (int k = 0; k < n; ++k) {
      const double tau = (k + 0.5) / n;
      const double bump = std::sin(std::numbers::pi * tau);
      const int t = span.start + k;
      for (int d = 0; d < dim; ++d) {
        frames(t, d) = spk.anchors(p, d) + (tau - 0.5) * spk.slopes(p, d) + bump * spk.bumps(p, d);
        jitter(t, d) = spec.noise_sigma * noise(rng);
      }
      if (p == silence) {
        logf0(t) = kUnvoicedLogF0;
        ap(t) = 1.0;
      } else {
        logf0(t) = spk.logf0_mean + spk.logf0_range * (0.5 - tau) + 0.02 * noise(rng);
        ap(t) = 0.2 + 0.1 * bump;
      }
    }
  }
  if (spec.coarticulation_ms > 0.0) frames = coarticulate(frames, spec.coarticulation_ms / spec.frame_shift_ms);
  frames += jitter;
  // Features are kept float32-representable so files round-trip exactly.
  utt.features.frames = frames.cast<float>().cast<double>();
  utt.features.log_f0 = logf0.cast<float>().cast<double>();
  utt.features.aperiodicity = ap.cast<float>().cast<double>();
  utt.features.frame_shift_ms = spec.frame_shift_ms;
  utt.labels = labels_from_segmentation(utt.segmentation, silence);
  return utt;
}

std::vector<int> scale_durations(const std::vector<int>& source, double scale, double jitter,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(1.0 - jitter, 1.0 + jitter);
  std::vector<int> out;
  out.reserve(source.size());
  for (int d : source) {
    const double factor = jitter > 0.0 ? unif(rng) : 1.0;
    out.push_back(std::max(1, static_cast<int>(std::lround(d * scale * factor))));
  }
  return out;
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int n_phonemes = spec.inventory.size();
  const int dim = spec.feature_dim;
  const int silence = spec.inventory.silence_index();

  SpeakerProfile source;
  source.anchors = random_matrix(rng, n_phonemes, dim, spec.anchor_scale);
  source.slopes = random_matrix(rng, n_phonemes, dim, spec.trajectory_scale);
  source.bumps = random_matrix(rng, n_phonemes, dim, 0.5 * spec.trajectory_scale);
  source.duration_scale = 1.0;
  source.logf0_mean = std::log(220.0);
  source.logf0_range = 0.1;

  std::vector<SpeakerProfile> others;
  others.push_back(derive_speaker(source, rng, spec.phonetic_offset_scale, spec.duration_scale,
                                  std::log(120.0)));
  std::uniform_real_distribution<double> filler_scale(std::min(1.0, spec.duration_scale),
                                                      std::max(1.0, spec.duration_scale));
  for (int f = 0; f < spec.n_filler_speakers; ++f) {
    const double scale = filler_scale(rng);
    others.push_back(derive_speaker(source, rng, spec.phonetic_offset_scale, scale,
                                    std::log(150.0 + 20.0 * f)));
  }

  Corpus corpus;
  corpus.inventory = spec.inventory;
  corpus.n_speakers = 2 + spec.n_filler_speakers;

  std::uniform_int_distribution<int> length_dist(spec.min_phonemes, spec.max_phonemes);
  std::uniform_int_distribution<int> dur_dist(spec.min_duration, spec.max_duration);
  std::uniform_int_distribution<int> phone_dist(0, n_phonemes - 2);

  const int total = spec.n_train_utterances + spec.n_eval_utterances;
  for (int u = 0; u < total; ++u) {
    const int n = length_dist(rng);
    std::vector<int> phonemes{silence};
    while (static_cast<int>(phonemes.size()) < n + 1) {
      int p = phone_dist(rng);
      if (p >= silence) ++p;  // skip silence
      if (p == phonemes.back()) continue;
      phonemes.push_back(p);
    }
    phonemes.push_back(silence);

    std::vector<int> src_durations;
    for (std::size_t i = 0; i < phonemes.size(); ++i) src_durations.push_back(dur_dist(rng));

    ParallelUtterance utt;
    std::ostringstream id;
    id << (u < spec.n_train_utterances ? "train" : "eval") << '_';
    id.width(4);
    id.fill('0');
    id << (u < spec.n_train_utterances ? u : u - spec.n_train_utterances);
    utt.id = id.str();
    utt.source = render(source, kSourceSpeaker, phonemes, src_durations, spec, rng);
    const auto tgt_durations =
        scale_durations(src_durations, spec.duration_scale, spec.duration_jitter, rng);
    utt.target = render(others[0], kTargetSpeaker, phonemes, tgt_durations, spec, rng);
    for (int f = 0; f < spec.n_filler_speakers; ++f) {
      const auto& prof = others[1 + f];
      const auto durs =
          scale_durations(src_durations, prof.duration_scale, spec.duration_jitter, rng);
      utt.fillers.push_back(render(prof, 2 + f, phonemes, durs, spec, rng));
    }
    (u < spec.n_train_utterances ? corpus.train : corpus.eval).push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace ppgvc
