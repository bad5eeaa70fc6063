// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace ppgvc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("not an integer: '" + s + "'");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define PPGVC_DOUBLE(key, field)                                                        \
  Key {                                                                                 \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(v); },     \
        [](const ExperimentConfig& c) { return fmt(c.field); }                          \
  }
#define PPGVC_INT(key, field)                                                                \
  Key {                                                                                      \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<int>(to_int(v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                    \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      // CorpusSpec fields, bare names.
      Key{"phonemes",
          [](ExperimentConfig& c, const std::string& v) {
            c.corpus.inventory = PhonemeInventory(split_list(v), c.corpus.inventory.silence_id());
          },
          [](const ExperimentConfig& c) { return join(c.corpus.inventory.phonemes()); }},
      Key{"silence_id",
          [](ExperimentConfig& c, const std::string& v) {
            c.corpus.inventory = PhonemeInventory(c.corpus.inventory.phonemes(), v);
          },
          [](const ExperimentConfig& c) { return c.corpus.inventory.silence_id(); }},
      PPGVC_INT("n_train_utterances", corpus.n_train_utterances),
      PPGVC_INT("n_eval_utterances", corpus.n_eval_utterances),
      PPGVC_INT("feature_dim", corpus.feature_dim),
      PPGVC_DOUBLE("duration_scale", corpus.duration_scale),
      PPGVC_DOUBLE("duration_jitter", corpus.duration_jitter),
      PPGVC_DOUBLE("phonetic_offset_scale", corpus.phonetic_offset_scale),
      PPGVC_DOUBLE("noise_sigma", corpus.noise_sigma),
      PPGVC_DOUBLE("anchor_scale", corpus.anchor_scale),
      PPGVC_DOUBLE("trajectory_scale", corpus.trajectory_scale),
      PPGVC_INT("min_phonemes", corpus.min_phonemes),
      PPGVC_INT("max_phonemes", corpus.max_phonemes),
      PPGVC_INT("min_duration", corpus.min_duration),
      PPGVC_INT("max_duration", corpus.max_duration),
      PPGVC_DOUBLE("frame_shift_ms", corpus.frame_shift_ms),
      PPGVC_DOUBLE("coarticulation_ms", corpus.coarticulation_ms),
      PPGVC_INT("n_filler_speakers", corpus.n_filler_speakers),
      Key{"seed",
          [](ExperimentConfig& c, const std::string& v) {
            c.corpus.seed = static_cast<std::uint64_t>(to_int(v));
          },
          [](const ExperimentConfig& c) { return std::to_string(c.corpus.seed); }},

      PPGVC_DOUBLE("preprocess.smoothing_cutoff_hz", preprocess.smoothing_cutoff_hz),
      PPGVC_DOUBLE("preprocess.silence_removal_fraction", preprocess.silence_removal_fraction),

      PPGVC_INT("recognizer.hidden", recognizer.hidden),
      PPGVC_INT("recognizer.epochs", recognizer.epochs),
      PPGVC_DOUBLE("recognizer.learning_rate", recognizer.optimizer.learning_rate),
      PPGVC_DOUBLE("recognizer.epsilon", recognizer.optimizer.epsilon),
      PPGVC_DOUBLE("recognizer.init_range", recognizer.init_range),

      PPGVC_INT("synthesizer.hidden", synthesizer.hidden),
      PPGVC_INT("synthesizer.epochs", synthesizer.epochs),
      PPGVC_DOUBLE("synthesizer.learning_rate", synthesizer.optimizer.learning_rate),
      PPGVC_DOUBLE("synthesizer.epsilon", synthesizer.optimizer.epsilon),
      PPGVC_DOUBLE("synthesizer.init_range", synthesizer.init_range),

      PPGVC_INT("converter.hidden", converter.hidden),
      PPGVC_INT("converter.epochs", converter.epochs),
      PPGVC_DOUBLE("converter.learning_rate", converter.optimizer.learning_rate),
      PPGVC_DOUBLE("converter.epsilon", converter.optimizer.epsilon),
      PPGVC_DOUBLE("converter.init_range", converter.init_range),
      PPGVC_DOUBLE("converter.conversion_weight", converter.conversion_weight),
      PPGVC_DOUBLE("converter.ce_weight", converter.ce_weight),
      PPGVC_DOUBLE("converter.synthesis_weight", converter.synthesis_weight),
      Key{"converter.progress_inputs",
          [](ExperimentConfig& c, const std::string& v) {
            if (v != "0" && v != "1") throw ValidationError("expected 0 or 1");
            c.converter.progress_inputs = v == "1";
          },
          [](const ExperimentConfig& c) { return std::string(c.converter.progress_inputs ? "1" : "0"); }},

      PPGVC_DOUBLE("joint.ce_weight", joint_ce_weight),
      PPGVC_DOUBLE("joint.reconstruction_weight", joint_reconstruction_weight),
      Key{"joint.full_models",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "joint") c.joint_full_uses_joint_models = true;
            else if (v == "separate") c.joint_full_uses_joint_models = false;
            else throw ValidationError("joint.full_models must be 'joint' or 'separate'");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.joint_full_uses_joint_models ? "joint" : "separate");
          }},

      Key{"experiment.seeds",
          [](ExperimentConfig& c, const std::string& v) {
            c.seeds.clear();
            for (const auto& s : split_list(v)) c.seeds.push_back(static_cast<std::uint64_t>(to_int(s)));
          },
          [](const ExperimentConfig& c) {
            std::vector<std::string> s;
            for (auto v : c.seeds) s.push_back(std::to_string(v));
            return join(s);
          }},
      Key{"experiment.systems",
          [](ExperimentConfig& c, const std::string& v) { c.systems = split_list(v); },
          [](const ExperimentConfig& c) { return join(c.systems); }},
  };
  return table;
}

#undef PPGVC_DOUBLE
#undef PPGVC_INT

}  // namespace

ExperimentConfig::ExperimentConfig() {
  corpus.n_train_utterances = 150;
  corpus.coarticulation_ms = 10.0;
  recognizer.epochs = 100;
  synthesizer.epochs = 100;
  converter.epochs = 60;
  converter.hidden = 48;
}

void ExperimentConfig::validate() const {
  corpus.validate();
  if (!(preprocess.silence_removal_fraction >= 0.0 && preprocess.silence_removal_fraction <= 1.0))
    throw ValidationError("preprocess.silence_removal_fraction must lie in [0, 1]");
  const double nyquist = 500.0 / corpus.frame_shift_ms;
  if (!(preprocess.smoothing_cutoff_hz > 0.0 && preprocess.smoothing_cutoff_hz <= nyquist))
    throw ValidationError("preprocess.smoothing_cutoff_hz must lie in (0, Nyquist]");
  for (int h : {recognizer.hidden, synthesizer.hidden, converter.hidden})
    if (h < 1) throw ValidationError("hidden sizes must be >= 1");
  if (recognizer.epochs < 1 || synthesizer.epochs < 1 || converter.epochs < 1)
    throw ValidationError("epoch counts must be >= 1");
  if (seeds.empty()) throw ValidationError("experiment.seeds is empty");
  if (systems.empty()) throw ValidationError("experiment.systems is empty");
  for (const auto& s : systems)
    if (std::find(known_systems().begin(), known_systems().end(), s) == known_systems().end())
      throw ValidationError("unknown system '" + s + "'");
}

ExperimentConfig ExperimentConfig::for_seed(std::uint64_t seed) const {
  ExperimentConfig c = *this;
  c.corpus.seed = seed;
  c.recognizer.seed = seed;
  c.synthesizer.seed = seed;
  c.converter.seed = seed;
  return c;
}

JointRecSynConfig ExperimentConfig::joint_config() const {
  JointRecSynConfig j;
  j.recognizer = recognizer;
  j.synthesizer = synthesizer;
  j.ce_weight = joint_ce_weight;
  j.reconstruction_weight = joint_reconstruction_weight;
  return j;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end())
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->set(base, value);
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + " (" + key + "): " + e.what());
    }
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& k : keys()) out << k.name << " = " << k.get(config) << '\n';
  return out.str();
}

}  // namespace ppgvc
