// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ppgvc/checkpoint.hpp"

namespace ppgvc {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SpeakerUtterance> PreparedCorpus::frame_data_for(int speaker) const {
  std::vector<SpeakerUtterance> out;
  for (const auto& u : frame_data)
    if (u.speaker == speaker) out.push_back(u);
  return out;
}

PreparedCorpus prepare_corpus(const Corpus& raw, const PreprocessConfig& config, std::uint64_t seed) {
  PreparedCorpus p;
  p.raw = raw;
  Corpus smoothed = raw;
  for (auto& utt : smoothed.train) {
    auto smooth = [&](SpeakerUtterance& s) {
      auto f = smooth_trajectories(s.features, config.smoothing_cutoff_hz);
      s.features.frames = std::move(f.frames);
    };
    smooth(utt.source);
    smooth(utt.target);
    for (auto& f : utt.fillers) smooth(f);
  }
  std::tie(p.normalized, p.norm) = normalize_features(smoothed);

  std::vector<const Vector*> src_f0;
  std::vector<const Vector*> tgt_f0;
  for (const auto& utt : raw.train) {
    if (utt.source.features.log_f0) src_f0.push_back(&*utt.source.features.log_f0);
    if (utt.target.features.log_f0) tgt_f0.push_back(&*utt.target.features.log_f0);
  }
  if (!src_f0.empty() && !tgt_f0.empty()) {
    p.source_f0 = fit_f0_stats(src_f0);
    p.target_f0 = fit_f0_stats(tgt_f0);
  }

  const int sil = raw.inventory.silence_index();
  std::uint64_t k = 0;
  for (const auto& utt : p.normalized.train) {
    auto add = [&](const SpeakerUtterance& s) {
      p.frame_data.push_back(
          remove_silent_frames(s, config.silence_removal_fraction, sil, seed * 7727ull + k++));
    };
    add(utt.source);
    add(utt.target);
    for (const auto& f : utt.fillers) add(f);
  }
  return p;
}

ConvertedUtterance convert_utterance(const FeatureSequence& source, ConversionMode mode,
                                     const ConversionModels& models, const ConversionContext& context,
                                     const PhonemeSegmentation* source_segmentation,
                                     const std::vector<int>* target_durations) {
  if (!models.recognizer || !models.synthesizer)
    throw ValidationError("conversion needs a recognizer and a synthesizer");
  FeatureSequence x = source;
  x.frames = context.norm.apply(source.frames);
  ConvertedUtterance out;
  out.source_posteriors =
      estimate_posteriors(*models.recognizer, x, {kSourceSpeaker, context.n_speakers});

  if (mode == ConversionMode::kConventional) {
    out.target_posteriors = out.source_posteriors;
  } else {
    if (!models.converter) throw ValidationError("proposed conversion needs a converter");
    if (!source_segmentation || !target_durations)
      throw ValidationError("proposed conversion needs the source segmentation and target durations");
    source_segmentation->validate(source.length());
    out.target_posteriors = convert_posteriors(*models.converter, out.source_posteriors,
                                               *source_segmentation, *target_durations);
  }

  const auto y = synthesize(*models.synthesizer, out.target_posteriors);
  out.features.frame_shift_ms = source.frame_shift_ms;
  out.features.frames = context.norm.invert(y.frames);

  std::optional<WarpPath> warp;
  if (mode == ConversionMode::kProposed && (source.log_f0 || source.aperiodicity))
    warp = dtw_align(out.source_posteriors.probs, out.target_posteriors.probs,
                     LocalDistance::kEuclidean)
               .path;
  if (source.log_f0) {
    Vector f0 = transform_f0(*source.log_f0, context.source_f0, context.target_f0);
    out.features.log_f0 = warp ? apply_warp(f0, *warp, WarpSide::kAToB) : f0;
  }
  if (source.aperiodicity)
    out.features.aperiodicity =
        warp ? apply_warp(*source.aperiodicity, *warp, WarpSide::kAToB) : *source.aperiodicity;
  return out;
}

// ---------------------------------------------------------------------------

double ExperimentReport::mean(const std::string& system, const std::string& metric,
                              std::uint64_t seed) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.system == system && r.metric == metric && r.seed == seed) {
      sum += r.value;
      ++n;
    }
  }
  if (n == 0) throw ValidationError("no rows for " + system + "/" + metric);
  return sum / n;
}

double ExperimentReport::median_over_seeds(const std::string& system, const std::string& metric) const {
  std::vector<double> v;
  for (auto s : seeds) v.push_back(mean(system, metric, s));
  return median(v);
}

std::string ExperimentReport::metrics_csv() const {
  std::ostringstream out;
  out << "system,utterance,metric,value,seed\n";
  for (const auto& r : rows)
    out << r.system << ',' << r.utterance << ',' << r.metric << ',' << format_double(r.value) << ','
        << r.seed << '\n';
  return out.str();
}

std::string ExperimentReport::losses_csv() const {
  std::ostringstream out;
  out << "stage,seed,epoch,term,value\n";
  for (const auto& r : losses)
    out << r.stage << ',' << r.seed << ',' << r.epoch << ',' << r.term << ',' << format_double(r.value)
        << '\n';
  return out.str();
}

std::string ExperimentReport::summary() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto table = [&](const std::vector<std::string>& names, const std::string& metric) {
    out << std::left << std::setw(16) << "system";
    for (auto s : seeds) out << std::right << std::setw(12) << ("seed " + std::to_string(s));
    out << std::right << std::setw(12) << "median" << '\n';
    for (const auto& name : names) {
      out << std::left << std::setw(16) << name;
      for (auto s : seeds) out << std::right << std::setw(12) << mean(name, metric, s);
      out << std::right << std::setw(12) << median_over_seeds(name, metric) << '\n';
    }
  };
  out << "mean MCD [dB] on the evaluation set\n";
  table(systems, "mcd_db");
  std::vector<std::string> recs;
  for (const auto* r : {kSeparateRecognizer, kJointRecognizer})
    if (std::any_of(rows.begin(), rows.end(), [&](const MetricRow& m) { return m.system == r; }))
      recs.push_back(r);
  if (!recs.empty()) {
    out << "\nmean posterior entropy [nats] on the evaluation set\n";
    table(recs, "entropy_nats");
    out << "\ncurrent-phoneme frame accuracy on the evaluation set\n";
    table(recs, "accuracy");
  }
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : format_config(config)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

bool wants(const ExperimentConfig& c, const std::string& system) {
  return std::find(c.systems.begin(), c.systems.end(), system) != c.systems.end();
}

void add_converter_losses(ExperimentReport& report, const std::string& stage, std::uint64_t seed,
                          const std::vector<ConversionLossReport>& epochs) {
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const auto& r = epochs[e];
    const int ep = static_cast<int>(e);
    report.losses.push_back({stage, seed, ep, "conversion", r.conversion_term});
    report.losses.push_back({stage, seed, ep, "ce", r.ce_term});
    report.losses.push_back({stage, seed, ep, "synthesis", r.synthesis_term});
    report.losses.push_back({stage, seed, ep, "total", r.total});
  }
}

void add_curve(ExperimentReport& report, const std::string& stage, std::uint64_t seed,
               const std::string& term, const std::vector<double>& curve) {
  for (std::size_t e = 0; e < curve.size(); ++e)
    report.losses.push_back({stage, seed, static_cast<int>(e), term, curve[e]});
}

void recognizer_diagnostics(ExperimentReport& report, const char* name, std::uint64_t seed,
                            const RecognizerModel& r, const PreparedCorpus& data) {
  for (const auto& utt : data.normalized.eval) {
    for (const auto* s : {&utt.source, &utt.target}) {
      const auto p = estimate_posteriors(r, s->features, {s->speaker, data.raw.n_speakers});
      const std::string id = utt.id + "." + std::to_string(s->speaker);
      report.rows.push_back({name, id, "entropy_nats", mean_posterior_entropy(p), seed});
      report.rows.push_back({name, id, "accuracy", frame_accuracy(p, s->labels, 2), seed});
    }
  }
}

void run_seed(const ExperimentConfig& base, std::uint64_t seed, ExperimentReport& report) {
  const ExperimentConfig cfg = base.for_seed(seed);
  const Corpus raw = generate_corpus(cfg.corpus);
  const PreparedCorpus data = prepare_corpus(raw, cfg.preprocess, seed);
  const int classes = raw.inventory.size();
  const int n_spk = raw.n_speakers;
  const ConversionContext ctx{data.norm, data.source_f0, data.target_f0, n_spk};

  const bool joint_full_sep = wants(cfg, "joint-full") && !cfg.joint_full_uses_joint_models;
  const bool need_sep_r = wants(cfg, "conventional") || wants(cfg, "proposed") ||
                          wants(cfg, "ae-separate") || joint_full_sep;
  const bool need_sep_g = wants(cfg, "conventional") || wants(cfg, "proposed") || joint_full_sep;
  const bool need_joint = wants(cfg, "joint-rec-syn") || wants(cfg, "ae-joint") ||
                          (wants(cfg, "joint-full") && cfg.joint_full_uses_joint_models);

  std::optional<RecognizerModel> r_sep;
  std::optional<SynthesizerModel> g_sep;
  std::optional<SynthesizerModel> g_sep_src;
  std::optional<ConverterModel> c_sep;
  std::optional<JointRecSynResult> joint;
  std::optional<ConverterModel> c_joint;

  if (need_sep_r) {
    auto res = train_recognizer(data.frame_data, n_spk, classes, cfg.recognizer);
    add_curve(report, "recognizer", seed, "ce", res.loss_curve);
    r_sep = std::move(res.model);
    recognizer_diagnostics(report, kSeparateRecognizer, seed, *r_sep, data);
  }
  if (need_sep_g) {
    auto res = train_synthesizer(data.frame_data_for(kTargetSpeaker), &*r_sep, cfg.synthesizer);
    add_curve(report, "synthesizer", seed, "mse", res.loss_curve);
    g_sep = std::move(res.model);
  }
  if (wants(cfg, "ae-separate")) {
    auto res = train_synthesizer(data.frame_data_for(kSourceSpeaker), &*r_sep, cfg.synthesizer);
    add_curve(report, "synthesizer-source", seed, "mse", res.loss_curve);
    g_sep_src = std::move(res.model);
  }
  if (wants(cfg, "proposed")) {
    const auto pairs = make_segment_pairs(data.normalized.train, *r_sep);
    auto res = train_converter(pairs, cfg.converter);
    add_converter_losses(report, "converter", seed, res.epochs);
    c_sep = std::move(res.model);
  }
  if (need_joint) {
    joint = train_joint_recognition_synthesis(data.frame_data, n_spk, classes, cfg.joint_config());
    for (std::size_t e = 0; e < joint->epochs.size(); ++e) {
      const auto& j = joint->epochs[e];
      const int ep = static_cast<int>(e);
      report.losses.push_back({"joint-rec-syn", seed, ep, "ce", j.ce_term});
      report.losses.push_back({"joint-rec-syn", seed, ep, "reconstruction", j.reconstruction_term});
      report.losses.push_back({"joint-rec-syn", seed, ep, "total", j.total});
    }
    for (std::size_t i = 0; i < joint->synthesizer_curves.size(); ++i)
      add_curve(report, "joint-synthesizer-" + std::to_string(joint->synthesizers[i].speaker), seed,
                "mse", joint->synthesizer_curves[i]);
    recognizer_diagnostics(report, kJointRecognizer, seed, joint->recognizer, data);
  }
  if (wants(cfg, "joint-full")) {
    const RecognizerModel& r = cfg.joint_full_uses_joint_models ? joint->recognizer : *r_sep;
    const SynthesizerModel& g =
        cfg.joint_full_uses_joint_models ? joint->synthesizer(kTargetSpeaker) : *g_sep;
    auto res = train_joint_full(data.normalized.train, r, g, cfg.converter);
    add_converter_losses(report, "joint-full", seed, res.epochs);
    c_joint = std::move(res.model);
  }

  for (std::size_t i = 0; i < raw.eval.size(); ++i) {
    const auto& utt = raw.eval[i];
    const auto durations = utt.target.segmentation.durations();
    const Matrix& y = utt.target.features.frames;
    for (const auto& system : cfg.systems) {
      double mcd = 0.0;
      if (system == "conventional" || system == "joint-rec-syn") {
        const bool j = system == "joint-rec-syn";
        const ConversionModels m{j ? &joint->recognizer : &*r_sep,
                                 j ? &joint->synthesizer(kTargetSpeaker) : &*g_sep, nullptr};
        const auto out = convert_utterance(utt.source.features, ConversionMode::kConventional, m, ctx);
        mcd = mel_cepstral_distortion(y, out.features.frames, false);
      } else if (system == "proposed" || system == "joint-full") {
        ConversionModels m{&*r_sep, g_sep ? &*g_sep : nullptr, &*c_sep};
        if (system == "joint-full") {
          m.converter = &*c_joint;
          if (cfg.joint_full_uses_joint_models) {
            m.recognizer = &joint->recognizer;
            m.synthesizer = &joint->synthesizer(kTargetSpeaker);
          }
        }
        const auto out = convert_utterance(utt.source.features, ConversionMode::kProposed, m, ctx,
                                           &utt.source.segmentation, &durations);
        mcd = mel_cepstral_distortion(y, out.features.frames, true);
      } else {
        const bool j = system == "ae-joint";
        const RecognizerModel& r = j ? joint->recognizer : *r_sep;
        const SynthesizerModel& g = j ? joint->synthesizer(kSourceSpeaker) : *g_sep_src;
        const auto& x = data.normalized.eval[i].source.features;
        const auto p = estimate_posteriors(r, x, {kSourceSpeaker, n_spk});
        const Matrix rec = data.norm.invert(synthesize(g, p).frames);
        mcd = mel_cepstral_distortion(utt.source.features.frames, rec, true);
      }
      report.rows.push_back({system, utt.id, "mcd_db", mcd, seed});
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::optional<fs::path>& out_dir) {
  config.validate();
  ExperimentReport report;
  report.seeds = config.seeds;
  report.systems = config.systems;
  if (out_dir) fs::create_directories(*out_dir);
  std::uint64_t current = 0;
  try {
    for (auto seed : config.seeds) {
      current = seed;
      run_seed(config, seed, report);
    }
  } catch (const std::exception& e) {
    if (out_dir) {
      std::ostringstream log;
      log << "run-experiment failed at seed " << current << "\n" << e.what() << "\n\nconfig:\n"
          << format_config(config);
      write_text(*out_dir / "diagnostics.log", log.str());
    }
    throw;
  }
  if (out_dir) {
    write_text(*out_dir / "metrics.csv", report.metrics_csv());
    write_text(*out_dir / "losses.csv", report.losses_csv());
    write_text(*out_dir / "summary.txt", report.summary());
    write_text(*out_dir / "config.txt", format_config(config));
    nlohmann::ordered_json manifest;
    manifest["tool"] = "ppgvc";
    manifest["version"] = kVersion;
    manifest["seeds"] = config.seeds;
    manifest["systems"] = config.systems;
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
    manifest["config_hash_fnv1a64"] = hash.str();
    manifest["config_file"] = "config.txt";
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    write_text(*out_dir / "manifest.json", manifest.dump(2) + "\n");
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

int meta_int(const ArchManifest& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw FormatError("model manifest lacks '" + key + "'");
  return std::stoi(it->second);
}

}  // namespace

void save_recognizer(const RecognizerModel& model, const fs::path& path) {
  auto manifest = model.net.manifest();
  manifest["model.role"] = "recognizer";
  manifest["model.feature_dim"] = std::to_string(model.feature_dim);
  manifest["model.n_speakers"] = std::to_string(model.n_speakers);
  write_checkpoint(make_checkpoint(model.net.params(), manifest), path);
}

RecognizerModel load_recognizer(const fs::path& path) {
  const auto data = read_checkpoint(path);
  const auto arch = FrameClassifier::arch_from_manifest(data.manifest);
  auto model = RecognizerModel::create(meta_int(data.manifest, "model.feature_dim"),
                                       meta_int(data.manifest, "model.n_speakers"), arch.classes,
                                       arch.hidden);
  if (model.net.arch().input_dim != arch.input_dim)
    throw FormatError(path.string() + ": recognizer input width disagrees with its metadata");
  restore_checkpoint(data, model.net.params());
  return model;
}

void save_synthesizer(const SynthesizerModel& model, const fs::path& path) {
  auto manifest = model.net.manifest();
  manifest["model.role"] = "synthesizer";
  manifest["model.classes"] = std::to_string(model.classes);
  manifest["model.speaker"] = std::to_string(model.speaker);
  write_checkpoint(make_checkpoint(model.net.params(), manifest), path);
}

SynthesizerModel load_synthesizer(const fs::path& path) {
  const auto data = read_checkpoint(path);
  const auto arch = FrameRegressor::arch_from_manifest(data.manifest);
  auto model = SynthesizerModel::create(meta_int(data.manifest, "model.classes"), arch.output_dim,
                                        arch.hidden, meta_int(data.manifest, "model.speaker"));
  restore_checkpoint(data, model.net.params());
  return model;
}

void save_converter(const ConverterModel& model, const fs::path& path) {
  auto manifest = model.net.manifest();
  manifest["model.role"] = "converter";
  write_checkpoint(make_checkpoint(model.net.params(), manifest), path);
}

ConverterModel load_converter(const fs::path& path) {
  const auto data = read_checkpoint(path);
  const auto arch = PosteriorEncoderDecoder::arch_from_manifest(data.manifest);
  auto model = ConverterModel::create(arch.classes, arch.hidden, arch.progress_inputs);
  restore_checkpoint(data, model.net.params());
  return model;
}

}  // namespace ppgvc
