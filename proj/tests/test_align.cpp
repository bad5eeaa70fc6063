#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ppgvc/align.hpp"

using namespace ppgvc;

TEST_SUITE("align") {

TEST_CASE("dtw cost equals exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> dim(1, 3);
  std::normal_distribution<double> n;
  for (int k = 0; k < 150; ++k) {
    const int d = dim(rng);
    const Matrix a = Matrix::NullaryExpr(len(rng), d, [&] { return n(rng); });
    const Matrix b = Matrix::NullaryExpr(len(rng), d, [&] { return n(rng); });
    const auto r = dtw_align(a, b);
    CHECK(std::abs(r.cost - oracle::brute_force_dtw(a, b)) <= 1e-12);
    CHECK_NOTHROW(r.path.validate(static_cast<int>(a.rows()), static_cast<int>(b.rows())));
    double along = 0.0;
    for (const auto& [i, j] : r.path.pairs) along += oracle::sq_dist(a, i, b, j);
    CHECK(std::abs(along - r.cost) <= 1e-12);
  }
}

TEST_CASE("small alignments") {
  Matrix a(2, 1), b(3, 1);
  a << 0, 2;
  b << 0, 1, 2;
  CHECK(dtw_align(a, b).cost == 1.0);
  const Matrix x = Matrix::Random(4, 2);
  const auto self = dtw_align(x, x);
  CHECK(self.cost == 0.0);
  CHECK(self.path.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  Matrix one(1, 1), many(4, 1);
  one << 1;
  many << 1, 2, 3, 1;
  CHECK(dtw_align(one, many).path.pairs.size() == 4);
  CHECK_THROWS_AS(dtw_align(Matrix(0, 1), many), ValidationError);
  CHECK_THROWS_AS(dtw_align(Matrix::Zero(2, 2), many), ValidationError);
}

TEST_CASE("euclidean distance option") {
  Matrix a(2, 2), b(2, 2);
  a << 0, 0, 3, 4;
  b << 0, 0, 0, 0;
  CHECK(dtw_align(a, b, LocalDistance::kEuclidean).cost == doctest::Approx(5.0));
  CHECK(dtw_align(a, b).cost == doctest::Approx(25.0));
}

TEST_CASE("path validation") {
  WarpPath p{{{0, 0}, {2, 1}}};
  CHECK_THROWS_AS(p.validate(3, 2), ValidationError);
  WarpPath q{{{0, 0}, {1, 1}}};
  CHECK_THROWS_AS(q.validate(3, 2), ValidationError);
  WarpPath r{{{0, 1}, {1, 1}}};
  CHECK_THROWS_AS(r.validate(2, 2), ValidationError);
}

TEST_CASE("warping") {
  const Matrix x = Matrix::Random(5, 3);
  WarpPath diag;
  for (int i = 0; i < 5; ++i) diag.pairs.push_back({i, i});
  CHECK(apply_warp(x, diag, WarpSide::kAToB) == x);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k) {
    const Matrix a = Matrix::NullaryExpr(3 + k % 4, 2, [&] { return n(rng); });
    const Matrix b = Matrix::NullaryExpr(2 + k % 5, 2, [&] { return n(rng); });
    const auto path = dtw_align(a, b).path;
    CHECK(apply_warp(a, path, WarpSide::kAToB).rows() == b.rows());
    CHECK(apply_warp(b, path, WarpSide::kBToA).rows() == a.rows());
    const Vector c = Vector::Constant(a.rows(), 2.5);
    CHECK((apply_warp(c, path, WarpSide::kAToB).array() == 2.5).all());
  }

  WarpPath stretch{{{0, 0}, {0, 1}, {1, 2}, {1, 3}}};
  Vector s(2);
  s << 7, 9;
  Vector expect(4);
  expect << 7, 7, 9, 9;
  CHECK(apply_warp(s, stretch, WarpSide::kAToB) == expect);
  WarpPath squeeze{{{0, 0}, {1, 0}, {2, 1}}};
  Vector t(3);
  t << 1, 2, 3;
  Vector first(2);
  first << 1, 3;
  CHECK(apply_warp(t, squeeze, WarpSide::kAToB) == first);
  CHECK_THROWS_AS(apply_warp(Vector(Vector::Zero(5)), squeeze, WarpSide::kAToB), ValidationError);
}

TEST_CASE("F0 transform") {
  const F0Stats src{5.0, 0.2}, tgt{4.5, 0.1};
  Vector f(3);
  f << 5.2, kUnvoicedLogF0, 5.0;
  const auto out = transform_f0(f, src, tgt);
  CHECK(out(0) == doctest::Approx(4.6));
  CHECK(out(1) == kUnvoicedLogF0);
  CHECK(out(2) == doctest::Approx(4.5));
  CHECK((transform_f0(f, src, src) - f).cwiseAbs().maxCoeff() < 1e-12);
}

}
