// SPDX-License-Identifier: Apache-2.0
//
// Key/value experiment configuration. One "key = value" per line, '#' starts
// a comment. Corpus keys are the bare CorpusSpec field names; all other keys
// carry a section prefix. See docs/config.md for the full list.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppgvc/jointtrain.hpp"

namespace ppgvc {

struct PreprocessConfig {
  double smoothing_cutoff_hz = 50.0;
  double silence_removal_fraction = 0.8;
};

/// Evaluation systems understood by run_experiment.
inline const std::vector<std::string>& known_systems() {
  static const std::vector<std::string> names{
      "conventional",   // G(R(x)), separately trained, DTW-aligned MCD
      "proposed",       // G(C(R(x))), separately trained, reference durations
      "joint-full",     // G(C(R(x))), R/G jointly trained, C with synthesis term
      "joint-rec-syn",  // G(R(x)) with jointly trained R/G, DTW-aligned MCD
      "ae-separate",    // source auto-encoding G_src(R(x)), separate training
      "ae-joint",       // source auto-encoding, joint R/G training
  };
  return names;
}

/// Component structs keep their library defaults; the constructor applies the
/// experiment defaults on top (see configs/default.conf).
struct ExperimentConfig {
  ExperimentConfig();

  CorpusSpec corpus;
  PreprocessConfig preprocess;
  RecognizerConfig recognizer;
  SynthesizerConfig synthesizer;
  ConverterConfig converter;
  double joint_ce_weight = 1.0;
  double joint_reconstruction_weight = 1.0;
  bool joint_full_uses_joint_models = true;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> systems{"conventional", "proposed", "joint-full", "ae-separate",
                                   "ae-joint"};

  void validate() const;
  /// Copy with every component seed set to `seed`.
  ExperimentConfig for_seed(std::uint64_t seed) const;
  JointRecSynConfig joint_config() const;
};

/// Throws ValidationError naming the line for unknown keys or bad values.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& config);

}  // namespace ppgvc
