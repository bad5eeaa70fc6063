// SPDX-License-Identifier: Apache-2.0
//
// ppgvc command-line tool. Exit status: 0 success, 1 invalid input, 2 runtime failure.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ppgvc/checkpoint.hpp"
#include "ppgvc/corpus_store.hpp"
#include "ppgvc/feature_io.hpp"
#include "ppgvc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ppgvc;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "ppgvc-out";
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) {
    cfg = cfg.for_seed(*g.seed);
    cfg.seeds = {*g.seed};
  } else {
    cfg = cfg.for_seed(cfg.corpus.seed);
  }
  return cfg;
}

fs::path model_dir(const Globals& g) { return fs::path(g.out_dir) / "models"; }
fs::path corpus_dir(const Globals& g) { return fs::path(g.out_dir) / "corpus"; }

PreparedCorpus load_prepared(const Globals& g, const ExperimentConfig& cfg) {
  if (!fs::exists(corpus_dir(g) / "corpus.txt"))
    throw ValidationError("no corpus under " + corpus_dir(g).string() + " (run gen-corpus first)");
  return prepare_corpus(read_corpus(corpus_dir(g)), cfg.preprocess, cfg.corpus.seed);
}

void write_loss_log(const fs::path& path, const std::string& header,
                    const std::vector<std::string>& lines) {
  std::ofstream out(path);
  out << header << '\n';
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> curve_lines(const std::vector<double>& curve) {
  std::vector<std::string> out;
  for (std::size_t e = 0; e < curve.size(); ++e)
    out.push_back(std::to_string(e) + "," + format_double(curve[e]));
  return out;
}

std::vector<std::string> converter_lines(const std::vector<ConversionLossReport>& epochs) {
  std::vector<std::string> out;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const auto& r = epochs[e];
    out.push_back(std::to_string(e) + "," + format_double(r.conversion_term) + "," +
                  format_double(r.ce_term) + "," + format_double(r.synthesis_term) + "," +
                  format_double(r.total));
  }
  return out;
}

std::string synth_name(bool joint, int speaker) {
  return std::string(joint ? "joint-synthesizer." : "synthesizer.") + std::to_string(speaker) + ".ckpt";
}

const std::vector<ParallelUtterance>& split_of(const Corpus& c, const std::string& split) {
  if (split == "train") return c.train;
  if (split == "eval") return c.eval;
  throw ValidationError("split must be 'train' or 'eval'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voice conversion through context posterior probabilities"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Key/value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override every component seed (and the experiment seed list)");
  app.add_option("--out-dir", g.out_dir, "Working directory for corpus, models and reports")
      ->capture_default_str();

  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic parallel corpus");
  auto* trec = app.add_subcommand("train-recognizer", "Train the context posterior recognizer");
  auto* tsyn = app.add_subcommand("train-synthesizer", "Train a speaker-dependent synthesizer");
  int syn_speaker = kTargetSpeaker;
  tsyn->add_option("--speaker", syn_speaker, "Speaker id")->capture_default_str();
  auto* tconv = app.add_subcommand("train-converter", "Train the posterior converter");
  bool with_synthesis = false;
  tconv->add_flag("--joint-with-synthesis", with_synthesis,
                  "Add the synthesis term through the frozen target synthesizer");
  auto* tjoint = app.add_subcommand("train-joint", "Joint training regimes");
  std::string stage;
  tjoint->add_option("--stage", stage, "rec-syn or full")
      ->required()
      ->check(CLI::IsMember({"rec-syn", "full"}));
  auto* conv = app.add_subcommand("convert", "Convert source utterances");
  std::string mode = "proposed";
  std::string models = "separate";
  std::string split = "eval";
  conv->add_option("--mode", mode)->check(CLI::IsMember({"conventional", "proposed"}))->capture_default_str();
  conv->add_option("--models", models)->check(CLI::IsMember({"separate", "joint"}))->capture_default_str();
  conv->add_option("--split", split)->check(CLI::IsMember({"train", "eval"}))->capture_default_str();
  auto* eval = app.add_subcommand("evaluate", "Mel-cepstral distortion of converted utterances");
  eval->add_option("--mode", mode)->check(CLI::IsMember({"conventional", "proposed"}))->capture_default_str();
  eval->add_option("--models", models)->check(CLI::IsMember({"separate", "joint"}))->capture_default_str();
  eval->add_option("--split", split)->check(CLI::IsMember({"train", "eval"}))->capture_default_str();
  auto* exp = app.add_subcommand("run-experiment", "Train every requested system and report");
  auto* show = app.add_subcommand("print-config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const ExperimentConfig cfg = load(g);
    if (show->parsed()) {
      std::cout << format_config(cfg);
      return 0;
    }
    fs::create_directories(g.out_dir);

    if (gen->parsed()) {
      write_corpus(generate_corpus(cfg.corpus), corpus_dir(g));
      std::cout << "wrote " << corpus_dir(g).string() << '\n';
    } else if (trec->parsed()) {
      const auto data = load_prepared(g, cfg);
      auto res = train_recognizer(data.frame_data, data.raw.n_speakers, data.raw.inventory.size(),
                                  cfg.recognizer);
      fs::create_directories(model_dir(g));
      save_recognizer(res.model, model_dir(g) / "recognizer.ckpt");
      write_loss_log(model_dir(g) / "recognizer.loss.csv", "epoch,ce", curve_lines(res.loss_curve));
      std::cout << "final cross entropy " << res.loss_curve.back() << '\n';
    } else if (tsyn->parsed()) {
      const auto data = load_prepared(g, cfg);
      const auto r = load_recognizer(model_dir(g) / "recognizer.ckpt");
      auto res = train_synthesizer(data.frame_data_for(syn_speaker), &r, cfg.synthesizer);
      save_synthesizer(res.model, model_dir(g) / synth_name(false, syn_speaker));
      write_loss_log(model_dir(g) / ("synthesizer." + std::to_string(syn_speaker) + ".loss.csv"),
                     "epoch,mse", curve_lines(res.loss_curve));
      std::cout << "final mse " << res.loss_curve.back() << '\n';
    } else if (tconv->parsed() || (tjoint->parsed() && stage == "full")) {
      const bool joint = tjoint->parsed();
      const bool joint_models = joint && cfg.joint_full_uses_joint_models;
      const auto data = load_prepared(g, cfg);
      const auto r = load_recognizer(model_dir(g) / (joint_models ? "joint-recognizer.ckpt" : "recognizer.ckpt"));
      ConverterTrainingResult res;
      if (joint || with_synthesis) {
        const auto syn = load_synthesizer(model_dir(g) / synth_name(joint_models, kTargetSpeaker));
        res = train_joint_full(data.normalized.train, r, syn, cfg.converter);
      } else {
        res = train_converter(make_segment_pairs(data.normalized.train, r), cfg.converter);
      }
      const std::string name = joint ? "joint-converter" : "converter";
      save_converter(res.model, model_dir(g) / (name + ".ckpt"));
      write_loss_log(model_dir(g) / (name + ".loss.csv"), "epoch,conversion,ce,synthesis,total",
                     converter_lines(res.epochs));
      std::cout << "final loss " << res.epochs.back().total << '\n';
    } else if (tjoint->parsed()) {
      const auto data = load_prepared(g, cfg);
      auto res = train_joint_recognition_synthesis(data.frame_data, data.raw.n_speakers,
                                                   data.raw.inventory.size(), cfg.joint_config());
      fs::create_directories(model_dir(g));
      save_recognizer(res.recognizer, model_dir(g) / "joint-recognizer.ckpt");
      for (const auto& s : res.synthesizers)
        save_synthesizer(s, model_dir(g) / synth_name(true, s.speaker));
      std::vector<std::string> lines;
      for (std::size_t e = 0; e < res.epochs.size(); ++e)
        lines.push_back(std::to_string(e) + "," + format_double(res.epochs[e].ce_term) + "," +
                        format_double(res.epochs[e].reconstruction_term) + "," +
                        format_double(res.epochs[e].total));
      write_loss_log(model_dir(g) / "joint-rec-syn.loss.csv", "epoch,ce,reconstruction,total", lines);
      std::cout << "final joint loss " << res.epochs.back().total << '\n';
    } else if (conv->parsed()) {
      const auto data = load_prepared(g, cfg);
      const bool joint = models == "joint";
      const bool proposed = mode == "proposed";
      const auto r = load_recognizer(model_dir(g) / (joint ? "joint-recognizer.ckpt" : "recognizer.ckpt"));
      const auto syn = load_synthesizer(model_dir(g) / synth_name(joint, kTargetSpeaker));
      std::optional<ConverterModel> c;
      if (proposed)
        c = load_converter(model_dir(g) / (joint ? "joint-converter.ckpt" : "converter.ckpt"));
      const ConversionContext ctx{data.norm, data.source_f0, data.target_f0, data.raw.n_speakers};
      const ConversionModels m{&r, &syn, c ? &*c : nullptr};
      const fs::path dir = fs::path(g.out_dir) / "converted" / (mode + "-" + models) / split;
      fs::create_directories(dir);
      int n = 0;
      for (const auto& utt : split_of(data.raw, split)) {
        const auto durations = utt.target.segmentation.durations();
        const auto out = convert_utterance(
            utt.source.features, proposed ? ConversionMode::kProposed : ConversionMode::kConventional,
            m, ctx, &utt.source.segmentation, &durations);
        write_feature_file(out.features, dir / (utt.id + ".ppgf"));
        if (out.features.log_f0 && out.features.aperiodicity) {
          FeatureSequence exc;
          exc.frame_shift_ms = out.features.frame_shift_ms;
          exc.frames.resize(out.features.length(), 2);
          exc.frames.col(0) = *out.features.log_f0;
          exc.frames.col(1) = *out.features.aperiodicity;
          write_feature_file(exc, dir / (utt.id + ".exc.ppgf"));
        }
        ++n;
      }
      std::cout << "converted " << n << " utterances into " << dir.string() << '\n';
    } else if (eval->parsed()) {
      const Corpus corpus = read_corpus(corpus_dir(g));
      const fs::path dir = fs::path(g.out_dir) / "converted" / (mode + "-" + models) / split;
      const std::string system = mode + "-" + models;
      std::ofstream csv(fs::path(g.out_dir) / ("evaluation." + system + "." + split + ".csv"));
      csv << "system,utterance,metric,value,seed\n";
      double total = 0.0;
      int n = 0;
      for (const auto& utt : split_of(corpus, split)) {
        const auto converted = read_feature_file(dir / (utt.id + ".ppgf"));
        const double mcd = mel_cepstral_distortion(utt.target.features.frames, converted.frames,
                                                   mode == "proposed");
        csv << system << ',' << utt.id << ",mcd_db," << format_double(mcd) << ',' << cfg.corpus.seed
            << '\n';
        total += mcd;
        ++n;
      }
      if (n == 0) throw ValidationError("no utterances in split " + split);
      std::cout << "mean MCD " << total / n << " dB over " << n << " utterances\n";
    } else if (exp->parsed()) {
      ExperimentConfig run = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
      if (g.seed) run.seeds = {*g.seed};
      const auto report = run_experiment(run, fs::path(g.out_dir));
      std::cout << report.summary();
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
