#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gradcheck_cases.hpp"
#include "ppgvc/metrics.hpp"

using namespace ppgvc;

namespace {

PosteriorSequence uniform(int T, int K) {
  return {Matrix::Constant(T, 5 * K, 1.0 / K), K};
}

PosteriorSequence one_hot(const LabelSequence& labels, int K) {
  PosteriorSequence p{Matrix::Zero(labels.length(), 5 * K), K};
  for (int g = 0; g < 5; ++g)
    for (int t = 0; t < labels.length(); ++t) p.probs(t, g * K + labels.groups[g][t]) = 1.0;
  return p;
}

LabelSequence constant_labels(int T, int v) {
  LabelSequence l;
  for (auto& g : l.groups) g.assign(T, v);
  return l;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mcd values") {
  const Matrix a = Matrix::Random(7, 5);
  CHECK(mel_cepstral_distortion(a, a, true) == 0.0);
  Matrix b = a;
  b.col(1).array() += 1.0;
  CHECK(mel_cepstral_distortion(a, b, true) == doctest::Approx(10.0 / std::numbers::ln10 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(mel_cepstral_distortion(a, b, true) == doctest::Approx(6.1421).epsilon(1e-4));
  Matrix c0 = a;
  c0.col(0).array() += 3.0;
  CHECK(mel_cepstral_distortion(a, c0, true) == 0.0);
  const Matrix r = Matrix::Random(7, 5);
  CHECK(mel_cepstral_distortion(a, r, true) == doctest::Approx(mel_cepstral_distortion(r, a, true)));
}

TEST_CASE("mcd with alignment") {
  Matrix a(3, 2), b(5, 2);
  a << 0, 0, 0, 1, 0, 2;
  b << 0, 0, 0, 0, 0, 1, 0, 2, 0, 2;
  CHECK(mel_cepstral_distortion(a, b, false) == doctest::Approx(0.0));
  CHECK_THROWS_AS(mel_cepstral_distortion(a, b, true), ShapeError);
}

TEST_CASE("mcd argument errors") {
  CHECK_THROWS_AS(mel_cepstral_distortion(Matrix::Zero(3, 1), Matrix::Zero(3, 1), true), ValidationError);
  CHECK_THROWS_AS(mel_cepstral_distortion(Matrix::Zero(3, 3), Matrix::Zero(3, 4), true), ShapeError);
}

TEST_CASE("entropy bounds") {
  CHECK(mean_posterior_entropy(uniform(5, 4)) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(mean_posterior_entropy(one_hot(constant_labels(5, 2), 4)) == 0.0);
  std::mt19937_64 rng(4);
  const Matrix probs = gradcases::random_posteriors(rng, 9, 6);
  const PosteriorSequence p{probs, 6};
  const double h = mean_posterior_entropy(p);
  CHECK(h > 0.0);
  CHECK(h <= std::log(6.0));
  PosteriorSequence permuted = p;
  for (int g = 0; g < 5; ++g) permuted.probs.middleCols(g * 6, 6) = p.probs.middleCols(g * 6, 6).rowwise().reverse();
  CHECK(mean_posterior_entropy(permuted) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("accuracy") {
  std::mt19937_64 rng(5);
  const auto labels = gradcases::random_labels(rng, 1000, 4);
  CHECK(frame_accuracy(one_hot(labels, 4), labels, 2) == 1.0);
  LabelSequence wrong = labels;
  for (auto& v : wrong.groups[2]) v = (v + 1) % 4;
  CHECK(frame_accuracy(one_hot(labels, 4), wrong, 2) == 0.0);
  const PosteriorSequence random{gradcases::random_posteriors(rng, 1000, 4), 4};
  const double acc = frame_accuracy(random, labels, 2);
  const double sigma = std::sqrt(0.25 * 0.75 / 1000.0);
  CHECK(std::abs(acc - 0.25) < 3.0 * sigma);
  CHECK_THROWS_AS(frame_accuracy(uniform(3, 4), constant_labels(4, 0), 2), ShapeError);
  CHECK_THROWS_AS(frame_accuracy(uniform(3, 4), constant_labels(3, 0), 5), ValidationError);
}

}
