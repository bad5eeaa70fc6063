// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: ppgvc_acceptance [config-file]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "gradcheck_cases.hpp"
#include "oracles.hpp"
#include "ppgvc/align.hpp"
#include "ppgvc/checkpoint.hpp"
#include "ppgvc/config.hpp"
#include "ppgvc/feature_io.hpp"
#include "ppgvc/metrics.hpp"
#include "ppgvc/pipeline.hpp"

using namespace ppgvc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool ok, const std::string& detail) {
  results[id] = {ok, detail};
  std::cerr << "criterion " << id << " done" << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void gradient_criterion() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int min_checked = 1 << 30;
  std::string worst_case;
  const std::vector<std::pair<std::string, std::function<oracle::GradCheck(std::uint64_t)>>> cases{
      {"recognizer", gradcases::recognizer},
      {"synthesizer", gradcases::synthesizer},
      {"converter", [](std::uint64_t s) { return gradcases::converter(s, false); }},
      {"converter+synthesis", [](std::uint64_t s) { return gradcases::converter(s, true); }},
      {"joint recognition-synthesis", gradcases::joint_rec_syn},
  };
  for (const auto& [name, run] : cases)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = run(seed);
      min_checked = std::min(min_checked, r.checked);
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_case = name + " seed " + std::to_string(seed);
      }
    }
  const double elapsed = seconds_since(t0);
  report(1, worst <= 1e-4 && min_checked >= 100 && elapsed < 120.0,
         "max relative error " + num(worst, 3) + " (" + worst_case + "), >= " + std::to_string(min_checked) +
             " params per check, 5 cases x 5 seeds, " + num(elapsed, 3) + " s");
}

void dtw_criterion() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 6), dim(1, 3);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  const int instances = 200;
  for (int n = 0; n < instances; ++n) {
    const int d = dim(rng);
    Matrix a(len(rng), d), b(len(rng), d);
    for (auto* m : {&a, &b})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
    worst = std::max(worst, std::abs(dtw_align(a, b).cost - oracle::brute_force_dtw(a, b)));
  }
  report(2, worst <= 1e-12,
         std::to_string(instances) + " instances, max |dtw - exhaustive| = " + num(worst, 3));
}

void trend_criteria(const ExperimentConfig& config, const fs::path& out) {
  const auto t0 = Clock::now();
  const auto rep = run_experiment(config, out);
  const double elapsed = seconds_since(t0);
  auto med = [&](const char* system, const char* metric) { return rep.median_over_seeds(system, metric); };
  const std::string seeds = std::to_string(config.seeds.size()) + " seeds";

  const double conv = med("conventional", "mcd_db");
  const double prop = med("proposed", "mcd_db");
  report(3, config.seeds.size() >= 3 && prop < conv && elapsed < 900.0,
         "median MCD proposed " + num(prop) + " dB vs conventional " + num(conv) + " dB, " + seeds +
             ", experiment " + num(elapsed, 3) + " s");

  const double ae_sep = med("ae-separate", "mcd_db");
  const double ae_joint = med("ae-joint", "mcd_db");
  report(4, config.seeds.size() >= 3 && ae_joint <= ae_sep,
         "median auto-encoding MCD joint " + num(ae_joint) + " dB vs separate " + num(ae_sep) + " dB");

  const double full = med("joint-full", "mcd_db");
  report(5, config.seeds.size() >= 3 && full < conv,
         "median MCD joint-full " + num(full) + " dB vs conventional " + num(conv) +
             " dB (reported only: proposed " + num(prop) + " dB, joint-full " +
             (full < prop ? "better" : "not better") + " than separate)");

  const double h_sep = med(kSeparateRecognizer, "entropy_nats");
  const double h_joint = med(kJointRecognizer, "entropy_nats");
  report(6, config.seeds.size() >= 3 && h_joint > h_sep,
         "median posterior entropy joint " + num(h_joint) + " nats vs separate " + num(h_sep) + " nats");

  // Loss bookkeeping over every multi-term stage of the run.
  std::map<std::tuple<std::string, std::uint64_t, int>, std::map<std::string, double>> epochs;
  for (const auto& l : rep.losses) epochs[{l.stage, l.seed, l.epoch}][l.term] = l.value;
  double worst_gap = 0.0;
  int checked = 0, negative = 0;
  for (const auto& [key, terms] : epochs) {
    for (const auto& [term, v] : terms)
      if (v < 0.0 || !std::isfinite(v)) ++negative;
    const auto total = terms.find("total");
    if (total == terms.end()) continue;
    double sum = 0.0;
    for (const auto& [term, v] : terms)
      if (term != "total") sum += v;
    worst_gap = std::max(worst_gap, std::abs(sum - total->second));
    ++checked;
  }
  report(8, checked > 0 && worst_gap <= 1e-12 && negative == 0,
         std::to_string(checked) + " multi-term epochs, max |sum(terms) - total| = " + num(worst_gap, 3) +
             ", " + std::to_string(negative) + " negative or non-finite terms");
}

void contract_criterion(const fs::path& scratch) {
  std::vector<std::string> broken;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) broken.push_back(what);
  };

  auto cfg = parse_config(R"(
n_train_utterances = 6
n_eval_utterances = 4
recognizer.hidden = 8
recognizer.epochs = 5
synthesizer.hidden = 8
synthesizer.epochs = 5
converter.hidden = 8
converter.epochs = 5
experiment.seeds = 11
)");
  const auto seeded = cfg.for_seed(11);
  const auto raw = generate_corpus(seeded.corpus);
  const auto prep = prepare_corpus(raw, seeded.preprocess, 11);
  const int K = raw.inventory.size();
  const auto r = train_recognizer(prep.frame_data, 2, K, seeded.recognizer).model;
  const auto g = train_synthesizer(prep.frame_data_for(kTargetSpeaker), &r, seeded.synthesizer).model;
  const auto c = train_converter(make_segment_pairs(prep.normalized.train, r), seeded.converter).model;
  const ConversionContext ctx{prep.norm, prep.source_f0, prep.target_f0, 2};

  double row_err = 0.0;
  for (std::size_t i = 0; i < raw.eval.size(); ++i) {
    const auto& u = raw.eval[i];
    const auto& un = prep.normalized.eval[i];
    for (const auto* s : {&un.source, &un.target})
      row_err = std::max(row_err, estimate_posteriors(r, s->features, {s->speaker, 2}).max_row_sum_error());
    const auto px = estimate_posteriors(r, un.source.features, {kSourceSpeaker, 2});
    const auto durations = u.target.segmentation.durations();
    int expected = 0;
    for (int d : durations) expected += d;
    const auto cp = convert_posteriors(c, px, un.source.segmentation, durations);
    row_err = std::max(row_err, cp.max_row_sum_error());
    expect(cp.length() == expected, "convert_posteriors length");
    const auto conv = convert_utterance(u.source.features, ConversionMode::kConventional, {&r, &g, nullptr}, ctx);
    expect(conv.features.length() == u.source.features.length(), "conventional length");
    const auto prop = convert_utterance(u.source.features, ConversionMode::kProposed, {&r, &g, &c}, ctx,
                                        &u.source.segmentation, &durations);
    expect(prop.features.length() == expected, "proposed length");
  }
  expect(row_err <= 1e-9, "posterior row sums");

  // File formats.
  fs::create_directories(scratch / "files");
  const auto& u0 = raw.train[0].target;
  write_feature_file(u0.features, scratch / "files" / "u.ppgf");
  const auto back = read_feature_file(scratch / "files" / "u.ppgf");
  expect(back.frames == u0.features.frames, "feature file round trip");
  expect(encode_features(back.frames, back.frame_shift_ms) ==
             encode_features(u0.features.frames, u0.features.frame_shift_ms),
         "feature bytes");
  write_span_file(u0.segmentation, raw.inventory, scratch / "files" / "u.spans");
  expect(read_span_file(scratch / "files" / "u.spans", raw.inventory) == u0.segmentation, "span file round trip");
  const auto ckpt = make_checkpoint(r.net.params(), r.net.manifest());
  write_checkpoint(ckpt, scratch / "files" / "r.ckpt");
  expect(encode_checkpoint(read_checkpoint(scratch / "files" / "r.ckpt")) == encode_checkpoint(ckpt),
         "checkpoint round trip");

  // Same seed, end to end.
  cfg.systems = known_systems();
  run_experiment(cfg, scratch / "run-a");
  run_experiment(cfg, scratch / "run-b");
  for (const char* f : {"metrics.csv", "losses.csv", "summary.txt", "manifest.json"})
    expect(slurp(scratch / "run-a" / f) == slurp(scratch / "run-b" / f), std::string("identical ") + f);

  std::string detail = "row-sum error " + num(row_err, 3) + ", lengths, file round trips, repeated runs";
  if (!broken.empty()) {
    detail += "; broken:";
    for (const auto& b : broken) detail += " [" + b + "]";
  }
  report(7, broken.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const ExperimentConfig config = argc > 1 ? load_config(argv[1]) : ExperimentConfig{};
    const fs::path scratch = fs::temp_directory_path() / "ppgvc-acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    gradient_criterion();
    dtw_criterion();
    contract_criterion(scratch);
    trend_criteria(config, scratch / "experiment");
    std::cout << "experiment outputs in " << (scratch / "experiment").string() << std::endl;
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  int failures = 0;
  for (const auto& [id, r] : results) {
    std::cout << "criterion " << id << ": " << (r.first ? "PASS" : "FAIL") << "  " << r.second << '\n';
    failures += !r.first;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
