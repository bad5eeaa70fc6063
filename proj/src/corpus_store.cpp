// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/corpus_store.hpp"

#include <fstream>
#include <sstream>

#include "ppgvc/feature_io.hpp"

namespace ppgvc {

namespace fs = std::filesystem;

namespace {

std::string stem(const std::string& id, int speaker) { return id + "." + std::to_string(speaker); }

void write_speaker(const SpeakerUtterance& utt, const PhonemeInventory& inv, const fs::path& base) {
  write_feature_file(utt.features, fs::path(base.string() + ".ppgf"));
  write_span_file(utt.segmentation, inv, fs::path(base.string() + ".spans"));
  if (utt.features.log_f0 || utt.features.aperiodicity) {
    if (!utt.features.log_f0 || !utt.features.aperiodicity)
      throw ValidationError("write_corpus: excitation needs both log-F0 and aperiodicity");
    FeatureSequence exc;
    exc.frame_shift_ms = utt.features.frame_shift_ms;
    exc.frames.resize(utt.features.length(), 2);
    exc.frames.col(0) = *utt.features.log_f0;
    exc.frames.col(1) = *utt.features.aperiodicity;
    write_feature_file(exc, fs::path(base.string() + ".exc.ppgf"));
  }
}

SpeakerUtterance read_speaker(const PhonemeInventory& inv, const fs::path& base, int speaker) {
  SpeakerUtterance utt;
  utt.speaker = speaker;
  utt.features = read_feature_file(fs::path(base.string() + ".ppgf"));
  utt.segmentation = read_span_file(fs::path(base.string() + ".spans"), inv);
  utt.segmentation.validate(utt.features.length());
  const fs::path exc_path(base.string() + ".exc.ppgf");
  if (fs::exists(exc_path)) {
    const auto exc = read_feature_file(exc_path);
    if (exc.dim() != 2 || exc.length() != utt.features.length())
      throw FormatError(exc_path.string() + ": excitation shape does not match features");
    utt.features.log_f0 = Vector(exc.frames.col(0));
    utt.features.aperiodicity = Vector(exc.frames.col(1));
  }
  utt.labels = labels_from_segmentation(utt.segmentation, inv.silence_index());
  return utt;
}

}  // namespace

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  std::ostringstream manifest;
  manifest << "ppgvc-corpus 1\n";
  manifest << "phonemes";
  for (const auto& p : corpus.inventory.phonemes()) manifest << ' ' << p;
  manifest << "\nsilence " << corpus.inventory.silence_id() << '\n';
  manifest << "speakers " << corpus.n_speakers << '\n';
  for (const auto* split : {"train", "eval"}) {
    const auto& list = std::string(split) == "train" ? corpus.train : corpus.eval;
    fs::create_directories(dir / split);
    for (const auto& utt : list) {
      manifest << split << ' ' << utt.id << ' ' << utt.fillers.size() << '\n';
      write_speaker(utt.source, corpus.inventory, dir / split / stem(utt.id, utt.source.speaker));
      write_speaker(utt.target, corpus.inventory, dir / split / stem(utt.id, utt.target.speaker));
      for (const auto& f : utt.fillers)
        write_speaker(f, corpus.inventory, dir / split / stem(utt.id, f.speaker));
    }
  }
  std::ofstream out(dir / "corpus.txt", std::ios::binary);
  out << manifest.str();
  if (!out) throw Error("cannot write " + (dir / "corpus.txt").string());
}

Corpus read_corpus(const fs::path& dir) {
  const fs::path path = dir / "corpus.txt";
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read corpus manifest " + path.string());
  auto fail = [&](int line, const std::string& what) -> FormatError {
    return FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
  };
  std::string line;
  int line_no = 0;
  std::vector<std::string> phonemes;
  std::string silence;
  Corpus corpus;
  struct Entry {
    std::string split, id;
    int fillers;
  };
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    if (line_no == 1) {
      int version = 0;
      ls >> version;
      if (key != "ppgvc-corpus" || version != 1) throw fail(line_no, "not a corpus manifest");
    } else if (key == "phonemes") {
      for (std::string p; ls >> p;) phonemes.push_back(p);
    } else if (key == "silence") {
      ls >> silence;
    } else if (key == "speakers") {
      if (!(ls >> corpus.n_speakers) || corpus.n_speakers < 2) throw fail(line_no, "bad speaker count");
    } else if (key == "train" || key == "eval") {
      Entry e{key, "", 0};
      if (!(ls >> e.id >> e.fillers) || e.fillers < 0) throw fail(line_no, "bad utterance entry");
      entries.push_back(e);
    } else {
      throw fail(line_no, "unknown record '" + key + "'");
    }
  }
  corpus.inventory = PhonemeInventory(phonemes, silence);
  for (const auto& e : entries) {
    ParallelUtterance utt;
    utt.id = e.id;
    const fs::path base = dir / e.split;
    utt.source = read_speaker(corpus.inventory, base / stem(e.id, kSourceSpeaker), kSourceSpeaker);
    utt.target = read_speaker(corpus.inventory, base / stem(e.id, kTargetSpeaker), kTargetSpeaker);
    for (int f = 0; f < e.fillers; ++f)
      utt.fillers.push_back(read_speaker(corpus.inventory, base / stem(e.id, 2 + f), 2 + f));
    (e.split == "train" ? corpus.train : corpus.eval).push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace ppgvc
