#include <cmath>

#include "doctest.h"
#include "ppgvc/corpus.hpp"

using namespace ppgvc;

TEST_SUITE("corpus") {

TEST_CASE("inventory validation") {
  CHECK_NOTHROW(PhonemeInventory({"sil", "a", "i"}, "sil"));
  CHECK_THROWS_AS(PhonemeInventory({"sil", "a"}, "sil"), ValidationError);
  CHECK_THROWS_AS(PhonemeInventory({"sil", "a", "a"}, "sil"), ValidationError);
  CHECK_THROWS_AS(PhonemeInventory({"sil", "a", "i"}, "pau"), ValidationError);
  CHECK_THROWS_AS(PhonemeInventory({"sil", "a b", "i"}, "sil"), ValidationError);
  const PhonemeInventory inv({"a", "sil", "i"}, "sil");
  CHECK(inv.silence_index() == 1);
  CHECK(inv.index_of("i") == 2);
  CHECK_THROWS_AS(inv.index_of("u"), ValidationError);
}

TEST_CASE("labels from segmentation pad with silence") {
  PhonemeSegmentation seg{{{0, 0, 2}, {1, 2, 3}, {2, 3, 5}}};
  const auto l = labels_from_segmentation(seg, 0);
  CHECK(l.length() == 5);
  CHECK(l.current() == std::vector<int>{0, 0, 1, 2, 2});
  CHECK(l.groups[1] == std::vector<int>{0, 0, 0, 1, 1});
  CHECK(l.groups[3] == std::vector<int>{1, 1, 2, 0, 0});
  CHECK(l.groups[4] == std::vector<int>{2, 2, 0, 0, 0});
  CHECK(l.groups[0] == std::vector<int>{0, 0, 0, 0, 0});
}

TEST_CASE("segmentation validation") {
  PhonemeSegmentation gap{{{0, 0, 2}, {1, 3, 4}}};
  CHECK_THROWS_AS(gap.validate(4), ValidationError);
  PhonemeSegmentation empty{{{0, 0, 0}, {1, 0, 4}}};
  CHECK_THROWS_AS(empty.validate(4), ValidationError);
  PhonemeSegmentation short_cover{{{0, 0, 2}}};
  CHECK_THROWS_AS(short_cover.validate(3), ValidationError);
}

TEST_CASE("same spec gives identical corpora") {
  CorpusSpec spec;
  spec.n_train_utterances = 4;
  spec.n_eval_utterances = 2;
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].id == b.train[i].id);
    CHECK(a.train[i].source.features.frames == b.train[i].source.features.frames);
    CHECK(a.train[i].target.features.frames == b.train[i].target.features.frames);
    CHECK(a.train[i].target.segmentation == b.train[i].target.segmentation);
  }
  spec.seed = 2;
  const auto c = generate_corpus(spec);
  CHECK(c.train[0].source.features.frames != a.train[0].source.features.frames);
}

TEST_CASE("target spans follow the duration scale") {
  CorpusSpec spec;
  spec.n_train_utterances = 6;
  spec.n_eval_utterances = 2;
  spec.duration_jitter = 0.0;
  spec.duration_scale = 1.5;
  const auto corpus = generate_corpus(spec);
  for (const auto* split : {&corpus.train, &corpus.eval}) {
    for (const auto& utt : *split) {
      const auto src = utt.source.segmentation.durations();
      const auto tgt = utt.target.segmentation.durations();
      REQUIRE(src.size() == tgt.size());
      CHECK(utt.source.segmentation.phonemes() == utt.target.segmentation.phonemes());
      for (std::size_t k = 0; k < src.size(); ++k)
        CHECK(tgt[k] == std::max(1L, std::lround(1.5 * src[k])));
    }
  }
}

TEST_CASE("symmetric degenerate spec yields identical speakers") {
  CorpusSpec spec;
  spec.n_train_utterances = 3;
  spec.n_eval_utterances = 1;
  spec.noise_sigma = 0.0;
  spec.phonetic_offset_scale = 0.0;
  spec.duration_scale = 1.0;
  spec.duration_jitter = 0.0;
  const auto corpus = generate_corpus(spec);
  for (const auto& utt : corpus.train) CHECK(utt.source.features.frames == utt.target.features.frames);
}

TEST_CASE("utterances are framed by silence and consistent") {
  CorpusSpec spec;
  spec.n_train_utterances = 5;
  spec.n_eval_utterances = 1;
  spec.n_filler_speakers = 2;
  const auto corpus = generate_corpus(spec);
  CHECK(corpus.n_speakers == 4);
  const int sil = spec.inventory.silence_index();
  for (const auto& utt : corpus.train) {
    CHECK(utt.fillers.size() == 2);
    for (const auto* s : {&utt.source, &utt.target, &utt.fillers[0], &utt.fillers[1]}) {
      CHECK_NOTHROW(s->features.validate());
      CHECK_NOTHROW(s->segmentation.validate(s->features.length()));
      CHECK(s->labels.length() == s->features.length());
      CHECK(s->segmentation.spans.front().phoneme == sil);
      CHECK(s->segmentation.spans.back().phoneme == sil);
      for (std::size_t k = 1; k < s->segmentation.spans.size(); ++k)
        CHECK(s->segmentation.spans[k].phoneme != s->segmentation.spans[k - 1].phoneme);
    }
  }
}

TEST_CASE("invalid specs are rejected") {
  CorpusSpec spec;
  spec.feature_dim = 1;
  CHECK_THROWS_AS(generate_corpus(spec), ValidationError);
  spec = {};
  spec.duration_scale = 0.0;
  CHECK_THROWS_AS(generate_corpus(spec), ValidationError);
  spec = {};
  spec.noise_sigma = -1.0;
  CHECK_THROWS_AS(generate_corpus(spec), ValidationError);
  spec = {};
  spec.n_eval_utterances = 0;
  CHECK_THROWS_AS(generate_corpus(spec), ValidationError);
}

}
