#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "ppgvc/corpus_store.hpp"
#include "ppgvc/feature_io.hpp"

using namespace ppgvc;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ppgvc_tests";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_SUITE("feature_io") {

TEST_CASE("single frame file size") {
  Matrix m(1, 2);
  m << 0.5, -0.5;
  const auto bytes = encode_features(m, 5.0);
  CHECK(bytes.size() == 4 + 4 * 4 + 8 + 8);
  CHECK(std::memcmp(bytes.data(), "PPGF", 4) == 0);
  CHECK(bytes[8] == 1);   // T
  CHECK(bytes[12] == 2);  // D
  CHECK((bytes[16] | bytes[17] << 8) == 5000);
  CHECK(bytes[20] == 8);  // payload bytes
}

TEST_CASE("round trip is bit exact") {
  FeatureSequence seq;
  seq.frames = Matrix::Random(17, 5).cast<float>().cast<double>();
  seq.frame_shift_ms = 5.0;
  const auto path = scratch("roundtrip.ppgf");
  write_feature_file(seq, path);
  const auto back = read_feature_file(path);
  CHECK(back.frames == seq.frames);
  CHECK(back.frame_shift_ms == 5.0);
  CHECK(fs::file_size(path) == kFeatureHeaderBytes + 4 * 17 * 5);
}

TEST_CASE("corrupt files are rejected with offsets") {
  Matrix m = Matrix::Ones(3, 2);
  auto bytes = encode_features(m, 5.0);

  auto bad_magic = bytes;
  std::memcpy(bad_magic.data(), "XXXX", 4);
  CHECK_THROWS_AS(decode_features(bad_magic), FormatError);
  try {
    decode_features(bad_magic);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
  }

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_features(truncated), FormatError);

  auto short_header = bytes;
  short_header.resize(10);
  CHECK_THROWS_AS(decode_features(short_header), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_features(trailing), FormatError);

  auto nonfinite = bytes;
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(nonfinite.data() + kFeatureHeaderBytes + 4, &inf, 4);
  try {
    decode_features(nonfinite);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(std::to_string(kFeatureHeaderBytes + 4)) != std::string::npos);
  }
}

TEST_CASE("span files round trip") {
  const PhonemeInventory inv({"sil", "a", "i"}, "sil");
  PhonemeSegmentation seg{{{0, 0, 2}, {1, 2, 5}, {2, 5, 6}, {0, 6, 8}}};
  const auto path = scratch("spans.txt");
  write_span_file(seg, inv, path);
  CHECK(read_span_file(path, inv) == seg);
  std::ofstream(path) << "0 2 sil\n3 4 a\n";
  CHECK_THROWS_AS(read_span_file(path, inv), FormatError);
}

TEST_CASE("corpus directory round trip") {
  CorpusSpec spec;
  spec.n_train_utterances = 3;
  spec.n_eval_utterances = 2;
  spec.n_filler_speakers = 1;
  const auto corpus = generate_corpus(spec);
  const auto dir = scratch("corpus_dir");
  fs::remove_all(dir);
  write_corpus(corpus, dir);
  const auto back = read_corpus(dir);
  CHECK(back.inventory == corpus.inventory);
  CHECK(back.n_speakers == corpus.n_speakers);
  REQUIRE(back.train.size() == corpus.train.size());
  REQUIRE(back.eval.size() == corpus.eval.size());
  for (std::size_t i = 0; i < corpus.train.size(); ++i) {
    const auto& a = corpus.train[i];
    const auto& b = back.train[i];
    CHECK(a.id == b.id);
    CHECK(a.source.features.frames == b.source.features.frames);
    CHECK(*a.source.features.log_f0 == *b.source.features.log_f0);
    CHECK(*a.target.features.aperiodicity == *b.target.features.aperiodicity);
    CHECK(a.target.labels == b.target.labels);
    CHECK(a.fillers[0].features.frames == b.fillers[0].features.frames);
  }
}

}
