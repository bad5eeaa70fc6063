#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck_cases.hpp"
#include "oracles.hpp"
#include "ppgvc/networks.hpp"

using namespace ppgvc;

namespace {
double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

TEST_SUITE("seqmodel") {

TEST_CASE("single LSTM step matches hand arithmetic") {
  ParameterStore store;
  Lstm cell(store, "cell", 1, 1);
  store.mutable_value(store.find("cell.w_input")) << 0.5, -0.3, 0.8, 0.1;
  store.mutable_value(store.find("cell.w_recurrent")) << 0.2, 0.4, -0.6, 0.3;
  store.mutable_value(store.find("cell.bias")) << 0.1, 0.2, -0.1, 0.05;
  const double x = 0.7, h0 = 0.25, c0 = -0.4;
  const double i = sig(0.5 * x + 0.2 * h0 + 0.1);
  const double f = sig(-0.3 * x + 0.4 * h0 + 0.2);
  const double g = std::tanh(0.8 * x - 0.6 * h0 - 0.1);
  const double o = sig(0.1 * x + 0.3 * h0 + 0.05);
  const double c1 = f * c0 + i * g;
  const double h1 = o * std::tanh(c1);

  const LstmState init{Vector::Constant(1, h0), Vector::Constant(1, c0)};
  const auto next = cell.step(store, Vector::Constant(1, x), init);
  CHECK(std::abs(next.h(0) - h1) < 1e-12);
  CHECK(std::abs(next.c(0) - c1) < 1e-12);
  const auto tr = cell.forward(store, Matrix::Constant(1, 1, x), &init);
  CHECK(std::abs(tr.hidden(0, 0) - h1) < 1e-12);
  CHECK(std::abs(tr.cells(0, 0) - c1) < 1e-12);
}

TEST_CASE("backward direction consumes frames in reverse") {
  ParameterStore store;
  Lstm fwd(store, "f", 2, 3, Direction::kForward);
  Lstm bwd(store, "b", 2, 3, Direction::kBackward);
  store.init_uniform(4, 0.5);
  // Copy forward weights into the backward layer.
  for (const char* n : {".w_input", ".w_recurrent", ".bias"})
    store.mutable_value(store.find(std::string("b") + n)) = store.value(store.find(std::string("f") + n));
  Matrix x = Matrix::Random(5, 2);
  const Matrix reversed = x.colwise().reverse();
  const auto a = fwd.forward(store, x);
  const auto b = bwd.forward(store, reversed);
  CHECK((a.hidden - b.hidden.colwise().reverse()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("zero weights give uniform groups") {
  FrameClassifier net({4, 3, 6});
  const Matrix p = net.predict(Matrix::Random(5, 4));
  CHECK((p.array() - 1.0 / 6.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("dimension mismatch names the layer") {
  FrameClassifier net({4, 3, 6});
  try {
    net.predict(Matrix::Zero(3, 5));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("rec.rnn") != std::string::npos);
  }
}

TEST_CASE("linear layer gradient has closed form") {
  ParameterStore store;
  Dense d(store, "lin", 2, 1);
  store.mutable_value(store.find("lin.weight")) << 0.3, -0.2;
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  Matrix y(3, 1);
  y << 1, 0, -1;
  store.zero_grad();
  const Matrix out = d.forward(store, x);
  const auto loss = mse_loss(out, y);
  d.backward(store, x, loss.grad);
  // dL/dW = 2/n * (xW^T + b - y)^T x
  const Matrix expected = (2.0 / 3.0) * (out - y).transpose() * x;
  CHECK((store.grad(store.find("lin.weight")) - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(store.grad(store.find("lin.bias"))(0, 0) - (2.0 / 3.0) * (out - y).sum()) < 1e-12);
}

TEST_CASE("cross entropy of uniform posteriors over four classes") {
  const Matrix p = Matrix::Constant(3, 20, 0.25);
  LabelSequence l;
  for (auto& g : l.groups) g = {0, 1, 3};
  const auto r = grouped_cross_entropy(p, l, 4);
  CHECK(r.value == doctest::Approx(5.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy gradient is P - Y over T") {
  std::mt19937_64 rng(2);
  const Matrix p = gradcases::random_posteriors(rng, 4, 3);
  const auto l = gradcases::random_labels(rng, 4, 3);
  const auto r = grouped_cross_entropy(p, l, 3);
  for (int t = 0; t < 4; ++t)
    for (int g = 0; g < 5; ++g)
      for (int c = 0; c < 3; ++c) {
        const double y = l.groups[g][t] == c ? 1.0 : 0.0;
        CHECK(std::abs(r.grad(t, g * 3 + c) - (p(t, g * 3 + c) - y) / 4.0) < 1e-15);
      }
}

TEST_CASE("mse matches brute force") {
  Matrix a(2, 3), b(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  b << 0, 2, 1, 4, 8, 6;
  const auto r = mse_loss(a, b);
  CHECK(r.value == doctest::Approx((1.0 + 0.0 + 4.0 + 0.0 + 9.0 + 0.0) / 6.0));
  CHECK(r.grad(1, 1) == doctest::Approx(2.0 * -3.0 / 6.0));
  CHECK_THROWS_AS(mse_loss(a, Matrix::Zero(2, 2)), ShapeError);
}

TEST_CASE("softmax rows are positive and normalized") {
  std::mt19937_64 rng(5);
  const Matrix p = grouped_softmax(gradcases::random_matrix(rng, 7, 20, 30.0), 4);
  CHECK(p.minCoeff() > 0.0);
  for (int t = 0; t < 7; ++t)
    for (int g = 0; g < 5; ++g) CHECK(std::abs(p.row(t).segment(g * 4, 4).sum() - 1.0) < 1e-9);
}

TEST_CASE("softmax backward against finite differences") {
  std::mt19937_64 rng(6);
  const Matrix z = gradcases::random_matrix(rng, 3, 10);
  const Matrix w = gradcases::random_matrix(rng, 3, 10);
  const Matrix p = grouped_softmax(z, 2);
  const Matrix dz = grouped_softmax_backward(p, w, 2);
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < 10; ++c) {
      Matrix up = z, down = z;
      up(t, c) += 1e-6;
      down(t, c) -= 1e-6;
      const double num =
          ((grouped_softmax(up, 2).cwiseProduct(w)).sum() - (grouped_softmax(down, 2).cwiseProduct(w)).sum()) /
          2e-6;
      CHECK(oracle::relative_error(dz(t, c), num) < 1e-6);
    }
}

TEST_CASE("BiLSTM with final-state gradients passes finite differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    ParameterStore store;
    BiLstm rnn(store, "bi", 3, 2);
    store.init_uniform(seed, 0.6);
    const Matrix x = gradcases::random_matrix(rng, 5, 3);
    const Matrix w = gradcases::random_matrix(rng, 5, 4);
    const Vector wh = gradcases::random_matrix(rng, 2, 1).col(0);
    auto loss = [&] {
      const auto tr = rnn.forward(store, x);
      const auto fin = rnn.forward_layer().final_state(tr.forward);
      return tr.output.cwiseProduct(w).sum() + fin.h.dot(wh) + fin.c.sum();
    };
    store.zero_grad();
    const auto tr = rnn.forward(store, x);
    const LstmState df{wh, Vector::Ones(2)};
    rnn.backward(store, tr, w, &df, nullptr);
    const auto res = oracle::finite_difference(store, oracle::snapshot_grads(store), loss, 200, seed);
    CHECK(res.max_rel_error <= 1e-4);
  }
}

TEST_CASE("stale traces are rejected") {
  FrameClassifier net({2, 2, 3});
  net.params().init_uniform(1, 0.1);
  const auto tr = net.forward(Matrix::Random(3, 2));
  net.params().set_flat_value(0, 0.5);
  CHECK_THROWS_AS(net.backward(tr, Matrix::Zero(3, 15)), Error);
}

TEST_CASE("AdaGrad step matches hand value") {
  ParameterStore store;
  const auto h = store.add("w", 1, 2);
  store.mutable_value(h) << 1.0, -2.0;
  AdaGrad opt(store, {0.01, 1e-8});
  store.grad(h) << 0.5, -4.0;
  opt.step(store);
  CHECK(store.value(h)(0, 0) == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(store.value(h)(0, 1) == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  store.grad(h) << 0.5, 0.0;
  opt.step(store);
  CHECK(opt.accumulators()[0](0, 0) == doctest::Approx(0.5));
  CHECK(store.value(h)(0, 0) ==
        doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8) - 0.01 * 0.5 / (std::sqrt(0.5) + 1e-8)));
}

TEST_CASE("AdaGrad refuses non-finite gradients") {
  ParameterStore store;
  const auto h = store.add("w", 1, 2);
  AdaGrad opt(store, {});
  store.grad(h) << 1.0, std::nan("");
  const Matrix before = store.value(h);
  CHECK_THROWS_AS(opt.step(store), Error);
  CHECK(store.value(h) == before);
  CHECK(opt.accumulators()[0].isZero());
}

TEST_CASE("AdaGrad accumulators are monotone and steps bounded by lr") {
  std::mt19937_64 rng(9);
  ParameterStore store;
  const auto h = store.add("w", 3, 3);
  AdaGrad opt(store, {});
  Matrix prev = Matrix::Zero(3, 3);
  for (int k = 0; k < 20; ++k) {
    store.grad(h) = gradcases::random_matrix(rng, 3, 3);
    const Matrix before = store.value(h);
    opt.step(store);
    CHECK(((opt.accumulators()[0] - prev).array() >= 0.0).all());
    CHECK((store.value(h) - before).cwiseAbs().maxCoeff() <= 0.01 + 1e-15);
    prev = opt.accumulators()[0];
  }
}

TEST_CASE("network gradients pass finite differences") {
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    CHECK(gradcases::recognizer(seed).max_rel_error <= 1e-4);
    CHECK(gradcases::synthesizer(seed).max_rel_error <= 1e-4);
    CHECK(gradcases::converter(seed, false).max_rel_error <= 1e-4);
  }
}

}
