// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppgvc/common.hpp"

namespace ppgvc {

class PhonemeInventory {
 public:
  PhonemeInventory() = default;
  /// Throws ValidationError on duplicates, a missing silence entry, or fewer than 3 phonemes.
  PhonemeInventory(std::vector<std::string> phonemes, std::string silence_id);

  int size() const { return static_cast<int>(phonemes_.size()); }
  int silence_index() const { return silence_index_; }
  const std::string& silence_id() const { return phonemes_.at(silence_index_); }
  const std::string& name(int index) const { return phonemes_.at(index); }
  const std::vector<std::string>& phonemes() const { return phonemes_; }
  /// Throws ValidationError for unknown names.
  int index_of(const std::string& name) const;

  bool operator==(const PhonemeInventory&) const = default;

 private:
  std::vector<std::string> phonemes_;
  int silence_index_ = 0;
};

/// Sentinel stored in log-F0 tracks for unvoiced frames.
inline constexpr double kUnvoicedLogF0 = 0.0;

struct FeatureSequence {
  Matrix frames;  // T x D
  double frame_shift_ms = 5.0;
  std::optional<Vector> log_f0;        // T, kUnvoicedLogF0 where unvoiced
  std::optional<Vector> aperiodicity;  // T, placeholder band-aperiodicity channel

  int length() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
  void validate() const;
};

struct LabelSequence {
  std::array<std::vector<int>, kContextGroups> groups;

  int length() const { return static_cast<int>(groups[0].size()); }
  const std::vector<int>& current() const { return groups[2]; }
  void validate(int n_classes) const;
  bool operator==(const LabelSequence&) const = default;
};

struct Span {
  int phoneme = 0;
  int start = 0;  // inclusive
  int end = 0;    // exclusive

  int length() const { return end - start; }
  bool operator==(const Span&) const = default;
};

struct PhonemeSegmentation {
  std::vector<Span> spans;

  int total_frames() const { return spans.empty() ? 0 : spans.back().end; }
  std::vector<int> durations() const;
  std::vector<int> phonemes() const;
  /// Spans must tile [0, n_frames) in order with positive lengths.
  void validate(int n_frames) const;
  bool operator==(const PhonemeSegmentation&) const = default;
};

/// Derives per-frame quin-phone labels from span order; contexts beyond the
/// utterance edges are padded with the silence phoneme.
LabelSequence labels_from_segmentation(const PhonemeSegmentation& seg, int silence_index);

/// One speaker's rendition of an utterance.
struct SpeakerUtterance {
  FeatureSequence features;
  LabelSequence labels;
  PhonemeSegmentation segmentation;
  int speaker = 0;
};

inline constexpr int kSourceSpeaker = 0;
inline constexpr int kTargetSpeaker = 1;

struct ParallelUtterance {
  std::string id;
  SpeakerUtterance source;
  SpeakerUtterance target;
  /// Extra speakers (ids 2, 3, ...) used only for recognizer training.
  std::vector<SpeakerUtterance> fillers;
};

struct CorpusSpec {
  PhonemeInventory inventory{{"sil", "a", "i", "u", "k", "s"}, "sil"};
  int n_train_utterances = 40;
  int n_eval_utterances = 10;
  int feature_dim = 8;
  double duration_scale = 1.5;
  double duration_jitter = 0.1;  // per-phoneme multiplicative jitter half-width
  double phonetic_offset_scale = 1.0;
  double noise_sigma = 0.1;
  double anchor_scale = 1.5;
  double trajectory_scale = 1.0;
  int min_phonemes = 4;  // non-silence phonemes per utterance
  int max_phonemes = 7;
  int min_duration = 3;  // source frames per phoneme
  int max_duration = 7;
  double frame_shift_ms = 5.0;
  /// Std of the Gaussian blur across phoneme boundaries, in ms; 0 disables it.
  double coarticulation_ms = 0.0;
  int n_filler_speakers = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Corpus {
  PhonemeInventory inventory;
  int n_speakers = 2;
  std::vector<ParallelUtterance> train;
  std::vector<ParallelUtterance> eval;
};

/// Deterministic: equal CorpusSpec values give bit-identical corpora.
Corpus generate_corpus(const CorpusSpec& spec);

}  // namespace ppgvc
