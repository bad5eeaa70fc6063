// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration shared by the command-line tool and the
// acceptance suite.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppgvc/align.hpp"
#include "ppgvc/config.hpp"
#include "ppgvc/metrics.hpp"

namespace ppgvc {

inline constexpr const char* kVersion = "0.1.0";

/// Model-ready view of a raw corpus.
struct PreparedCorpus {
  Corpus raw;
  Corpus normalized;  // train smoothed then normalized, eval normalized only
  NormStats norm;
  F0Stats source_f0;
  F0Stats target_f0;
  /// Every speaker's training utterances after silence removal (R and G data).
  std::vector<SpeakerUtterance> frame_data;

  std::vector<SpeakerUtterance> frame_data_for(int speaker) const;
};

PreparedCorpus prepare_corpus(const Corpus& raw, const PreprocessConfig& config, std::uint64_t seed);

enum class ConversionMode { kConventional, kProposed };

struct ConversionModels {
  const RecognizerModel* recognizer = nullptr;
  const SynthesizerModel* synthesizer = nullptr;
  const ConverterModel* converter = nullptr;  // proposed mode only
};

struct ConversionContext {
  NormStats norm;
  F0Stats source_f0;
  F0Stats target_f0;
  int n_speakers = 2;
};

struct ConvertedUtterance {
  FeatureSequence features;  // denormalized, with converted excitation when the input had one
  PosteriorSequence source_posteriors;
  PosteriorSequence target_posteriors;  // equals source_posteriors in conventional mode
};

/// `source` holds raw (unnormalized) features. Proposed mode needs the source
/// segmentation and the reference target durations.
ConvertedUtterance convert_utterance(const FeatureSequence& source, ConversionMode mode,
                                     const ConversionModels& models, const ConversionContext& context,
                                     const PhonemeSegmentation* source_segmentation = nullptr,
                                     const std::vector<int>* target_durations = nullptr);

struct MetricRow {
  std::string system;
  std::string utterance;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

struct LossRow {
  std::string stage;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string term;
  double value = 0.0;
};

struct ExperimentReport {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> systems;
  std::vector<MetricRow> rows;
  std::vector<LossRow> losses;

  /// Mean over utterances; throws if there are no matching rows.
  double mean(const std::string& system, const std::string& metric, std::uint64_t seed) const;
  double median_over_seeds(const std::string& system, const std::string& metric) const;
  std::string metrics_csv() const;
  std::string losses_csv() const;
  std::string summary() const;
};

/// Row group names for the recognizer diagnostics.
inline constexpr const char* kSeparateRecognizer = "rec-separate";
inline constexpr const char* kJointRecognizer = "rec-joint";

std::uint64_t config_hash(const ExperimentConfig& config);

/// Runs every seed of `config`. With `out_dir`, writes metrics.csv, losses.csv,
/// summary.txt and manifest.json there; on failure writes diagnostics.log and rethrows.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Shortest round-trip decimal form.
std::string format_double(double v);
double median(std::vector<double> values);

// Model files: checkpoint plus manifest with enough metadata to rebuild the model.
void save_recognizer(const RecognizerModel& model, const std::filesystem::path& path);
RecognizerModel load_recognizer(const std::filesystem::path& path);
void save_synthesizer(const SynthesizerModel& model, const std::filesystem::path& path);
SynthesizerModel load_synthesizer(const std::filesystem::path& path);
void save_converter(const ConverterModel& model, const std::filesystem::path& path);
ConverterModel load_converter(const std::filesystem::path& path);

}  // namespace ppgvc
