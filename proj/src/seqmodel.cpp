// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ppgvc {

// ---------------------------------------------------------------------------
// ParameterStore

ParameterStore::Handle ParameterStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw ShapeError("parameter '" + name + "' must have positive shape");
  for (const auto& e : entries_)
    if (e.name == name) throw ShapeError("duplicate parameter name '" + name + "'");
  entries_.push_back({std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
  ++generation_;
  return entries_.size() - 1;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

Matrix& ParameterStore::mutable_value(Handle h) {
  ++generation_;
  return entries_.at(h).value;
}

ParameterStore::Handle ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  throw ShapeError("no parameter named '" + name + "'");
}

std::pair<std::size_t, Eigen::Index> ParameterStore::locate(std::size_t i) const {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto n = static_cast<std::size_t>(entries_[k].value.size());
    if (i < n) return {k, static_cast<Eigen::Index>(i)};
    i -= n;
  }
  throw std::out_of_range("flat parameter index out of range");
}

double ParameterStore::flat_value(std::size_t i) const {
  const auto [k, j] = locate(i);
  return entries_[k].value.data()[j];
}

void ParameterStore::set_flat_value(std::size_t i, double v) {
  const auto [k, j] = locate(i);
  entries_[k].value.data()[j] = v;
  ++generation_;
}

double ParameterStore::flat_grad(std::size_t i) const {
  const auto [k, j] = locate(i);
  return entries_[k].grad.data()[j];
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.grad.setZero();
}

void ParameterStore::init_uniform(std::uint64_t seed, double range) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-range, range);
  for (auto& e : entries_)
    for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = unif(rng);
  ++generation_;
}

bool ParameterStore::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return e.value.allFinite(); });
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(ParameterStore& store, const std::string& name, int in_dim, int out_dim)
    : name_(name), in_dim_(in_dim), out_dim_(out_dim) {
  weight_ = store.add(name + ".weight", out_dim, in_dim);
  bias_ = store.add(name + ".bias", out_dim, 1);
}

Matrix Dense::forward(const ParameterStore& store, const Matrix& x) const {
  if (x.cols() != in_dim_) {
    std::ostringstream msg;
    msg << "layer '" << name_ << "': expected input dim " << in_dim_ << ", got " << x.cols();
    throw ShapeError(msg.str());
  }
  Matrix y = x * store.value(weight_).transpose();
  y.rowwise() += store.value(bias_).col(0).transpose();
  return y;
}

Matrix Dense::backward(ParameterStore& store, const Matrix& x, const Matrix& dy) const {
  if (dy.cols() != out_dim_ || dy.rows() != x.rows())
    throw ShapeError("layer '" + name_ + "': upstream gradient shape mismatch");
  store.grad(weight_).noalias() += dy.transpose() * x;
  store.grad(bias_).col(0) += dy.colwise().sum().transpose();
  return dy * store.value(weight_);
}

// ---------------------------------------------------------------------------
// Lstm

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Lstm::Lstm(ParameterStore& store, const std::string& name, int in_dim, int hidden,
           Direction direction)
    : name_(name), in_dim_(in_dim), hidden_(hidden), direction_(direction) {
  if (in_dim < 1 || hidden < 1) throw ShapeError("layer '" + name + "': dims must be >= 1");
  w_input_ = store.add(name + ".w_input", 4 * hidden, in_dim);
  w_recurrent_ = store.add(name + ".w_recurrent", 4 * hidden, hidden);
  bias_ = store.add(name + ".bias", 4 * hidden, 1);
}

LstmState Lstm::zero_state() const { return {Vector::Zero(hidden_), Vector::Zero(hidden_)}; }

void Lstm::check_input(const Matrix& x) const {
  if (x.cols() != in_dim_) {
    std::ostringstream msg;
    msg << "layer '" << name_ << "': expected input dim " << in_dim_ << ", got " << x.cols();
    throw ShapeError(msg.str());
  }
}

LstmTrace Lstm::forward(const ParameterStore& store, const Matrix& x,
                        const LstmState* initial) const {
  check_input(x);
  const int T = static_cast<int>(x.rows());
  if (T < 1) throw ShapeError("layer '" + name_ + "': empty input sequence");
  const int H = hidden_;
  LstmTrace tr;
  tr.input = x;
  tr.initial = initial ? *initial : zero_state();
  if (tr.initial.h.size() != H || tr.initial.c.size() != H)
    throw ShapeError("layer '" + name_ + "': initial state size mismatch");
  tr.gates.resize(T, 4 * H);
  tr.cells.resize(T, H);
  tr.hidden.resize(T, H);

  Matrix pre = x * store.value(w_input_).transpose();
  pre.rowwise() += store.value(bias_).col(0).transpose();
  const Matrix& w_rec = store.value(w_recurrent_);

  Vector h = tr.initial.h;
  Vector c = tr.initial.c;
  Vector z(4 * H);
  for (int k = 0; k < T; ++k) {
    const int t = direction_ == Direction::kForward ? k : T - 1 - k;
    z.noalias() = pre.row(t).transpose();
    z.noalias() += w_rec * h;
    for (int j = 0; j < H; ++j) {
      const double ig = sigmoid(z(j));
      const double fg = sigmoid(z(H + j));
      const double gg = std::tanh(z(2 * H + j));
      const double og = sigmoid(z(3 * H + j));
      c(j) = fg * c(j) + ig * gg;
      h(j) = og * std::tanh(c(j));
      tr.gates(t, j) = ig;
      tr.gates(t, H + j) = fg;
      tr.gates(t, 2 * H + j) = gg;
      tr.gates(t, 3 * H + j) = og;
    }
    tr.cells.row(t) = c.transpose();
    tr.hidden.row(t) = h.transpose();
  }
  tr.generation = store.generation();
  tr.valid = true;
  return tr;
}

LstmState Lstm::final_state(const LstmTrace& trace) const {
  const int T = static_cast<int>(trace.hidden.rows());
  const int t = direction_ == Direction::kForward ? T - 1 : 0;
  return {trace.hidden.row(t).transpose(), trace.cells.row(t).transpose()};
}

LstmState Lstm::step(const ParameterStore& store, const Vector& x, const LstmState& prev) const {
  if (x.size() != in_dim_) throw ShapeError("layer '" + name_ + "': step input dim mismatch");
  const int H = hidden_;
  Vector z = store.value(w_input_) * x + store.value(bias_).col(0);
  z.noalias() += store.value(w_recurrent_) * prev.h;
  LstmState next{Vector(H), Vector(H)};
  for (int j = 0; j < H; ++j) {
    const double ig = sigmoid(z(j));
    const double fg = sigmoid(z(H + j));
    const double gg = std::tanh(z(2 * H + j));
    const double og = sigmoid(z(3 * H + j));
    next.c(j) = fg * prev.c(j) + ig * gg;
    next.h(j) = og * std::tanh(next.c(j));
  }
  return next;
}

LstmGrads Lstm::backward(ParameterStore& store, const LstmTrace& tr, const Matrix& dhidden,
                         const LstmState* dfinal) const {
  if (!tr.valid) throw Error("layer '" + name_ + "': backward called without a forward trace");
  if (tr.generation != store.generation())
    throw Error("layer '" + name_ + "': stale forward trace (parameters changed since forward)");
  const int T = static_cast<int>(tr.hidden.rows());
  const int H = hidden_;
  if (dhidden.rows() != T || dhidden.cols() != H)
    throw ShapeError("layer '" + name_ + "': hidden gradient shape mismatch");

  const Matrix& w_rec = store.value(w_recurrent_);
  Matrix dz(T, 4 * H);
  Matrix prev_hidden(T, H);
  Vector dh_carry = Vector::Zero(H);
  Vector dc_carry = Vector::Zero(H);
  if (dfinal) {
    dh_carry = dfinal->h;
    dc_carry = dfinal->c;
  }

  const bool fwd = direction_ == Direction::kForward;
  Vector c_prev(H);
  for (int k = T - 1; k >= 0; --k) {
    const int t = fwd ? k : T - 1 - k;
    const bool first = k == 0;
    const int tp = fwd ? t - 1 : t + 1;  // frame processed just before t
    if (first) {
      prev_hidden.row(t) = tr.initial.h.transpose();
      c_prev = tr.initial.c;
    } else {
      prev_hidden.row(t) = tr.hidden.row(tp);
      c_prev = tr.cells.row(tp).transpose();
    }

    for (int j = 0; j < H; ++j) {
      const double ig = tr.gates(t, j);
      const double fg = tr.gates(t, H + j);
      const double gg = tr.gates(t, 2 * H + j);
      const double og = tr.gates(t, 3 * H + j);
      const double tc = std::tanh(tr.cells(t, j));
      const double dh = dhidden(t, j) + dh_carry(j);
      const double dc = dc_carry(j) + dh * og * (1.0 - tc * tc);
      dz(t, j) = dc * gg * ig * (1.0 - ig);
      dz(t, H + j) = dc * c_prev(j) * fg * (1.0 - fg);
      dz(t, 2 * H + j) = dc * ig * (1.0 - gg * gg);
      dz(t, 3 * H + j) = dh * tc * og * (1.0 - og);
      dc_carry(j) = dc * fg;
    }
    dh_carry.noalias() = w_rec.transpose() * dz.row(t).transpose();
  }

  store.grad(w_input_).noalias() += dz.transpose() * tr.input;
  store.grad(w_recurrent_).noalias() += dz.transpose() * prev_hidden;
  store.grad(bias_).col(0) += dz.colwise().sum().transpose();

  LstmGrads out;
  out.dinput = dz * store.value(w_input_);
  out.dinitial = {dh_carry, dc_carry};
  return out;
}

// ---------------------------------------------------------------------------
// BiLstm

BiLstm::BiLstm(ParameterStore& store, const std::string& name, int in_dim, int hidden)
    : fwd_(store, name + ".fwd", in_dim, hidden, Direction::kForward),
      bwd_(store, name + ".bwd", in_dim, hidden, Direction::kBackward) {}

BiLstmTrace BiLstm::forward(const ParameterStore& store, const Matrix& x) const {
  BiLstmTrace tr;
  tr.forward = fwd_.forward(store, x);
  tr.backward = bwd_.forward(store, x);
  const int H = fwd_.hidden();
  tr.output.resize(x.rows(), 2 * H);
  tr.output.leftCols(H) = tr.forward.hidden;
  tr.output.rightCols(H) = tr.backward.hidden;
  return tr;
}

Matrix BiLstm::backward(ParameterStore& store, const BiLstmTrace& tr, const Matrix& doutput,
                        const LstmState* dfinal_forward,
                        const LstmState* dfinal_backward) const {
  const int H = fwd_.hidden();
  if (doutput.cols() != 2 * H) throw ShapeError("bidirectional layer: gradient width mismatch");
  const auto gf = fwd_.backward(store, tr.forward, doutput.leftCols(H), dfinal_forward);
  const auto gb = bwd_.backward(store, tr.backward, doutput.rightCols(H), dfinal_backward);
  return gf.dinput + gb.dinput;
}

// ---------------------------------------------------------------------------
// Grouped softmax and losses

namespace {

void check_group_width(const Matrix& m, int classes, const char* what) {
  if (classes < 1 || m.cols() != kContextGroups * classes) {
    std::ostringstream msg;
    msg << what << ": expected " << kContextGroups << " x " << classes << " columns, got "
        << m.cols();
    throw ShapeError(msg.str());
  }
}

}  // namespace

Matrix grouped_softmax(const Matrix& logits, int classes) {
  check_group_width(logits, classes, "grouped softmax");
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    for (int g = 0; g < kContextGroups; ++g) {
      const auto block = logits.row(t).segment(g * classes, classes);
      const double mx = block.maxCoeff();
      const Eigen::RowVectorXd e = (block.array() - mx).exp().matrix();
      probs.row(t).segment(g * classes, classes) = e / e.sum();
    }
  }
  return probs;
}

Matrix grouped_softmax_backward(const Matrix& probs, const Matrix& dprobs, int classes) {
  check_group_width(probs, classes, "grouped softmax backward");
  if (dprobs.rows() != probs.rows() || dprobs.cols() != probs.cols())
    throw ShapeError("grouped softmax backward: gradient shape mismatch");
  Matrix dlogits(probs.rows(), probs.cols());
  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    for (int g = 0; g < kContextGroups; ++g) {
      const auto p = probs.row(t).segment(g * classes, classes);
      const auto dp = dprobs.row(t).segment(g * classes, classes);
      const double inner = p.dot(dp);
      dlogits.row(t).segment(g * classes, classes) = (p.array() * (dp.array() - inner)).matrix();
    }
  }
  return dlogits;
}

LossResult grouped_cross_entropy(const Matrix& probs, const LabelSequence& labels, int classes) {
  check_group_width(probs, classes, "cross entropy");
  const auto T = probs.rows();
  if (labels.length() != T) {
    std::ostringstream msg;
    msg << "cross entropy: " << T << " prediction frames vs " << labels.length() << " labels";
    throw ShapeError(msg.str());
  }
  if (T < 1) throw ShapeError("cross entropy: empty sequence");
  LossResult out;
  out.grad = probs;
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int g = 0; g < kContextGroups; ++g) {
      const int label = labels.groups[g][t];
      if (label < 0 || label >= classes) throw ShapeError("cross entropy: label out of range");
      const Eigen::Index col = g * classes + label;
      total -= std::log(std::max(probs(t, col), std::numeric_limits<double>::min()));
      out.grad(t, col) -= 1.0;
    }
  }
  out.value = total / static_cast<double>(T);
  out.grad /= static_cast<double>(T);
  return out;
}

LossResult grouped_cross_entropy(const Matrix& probs, const Matrix& targets, int classes) {
  check_group_width(probs, classes, "cross entropy");
  if (targets.rows() != probs.rows() || targets.cols() != probs.cols())
    throw ShapeError("cross entropy: soft target shape mismatch");
  const auto T = probs.rows();
  if (T < 1) throw ShapeError("cross entropy: empty sequence");
  LossResult out;
  out.grad.resize(T, probs.cols());
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int g = 0; g < kContextGroups; ++g) {
      const auto p = probs.row(t).segment(g * classes, classes);
      const auto q = targets.row(t).segment(g * classes, classes);
      const double mass = q.sum();
      for (int c = 0; c < classes; ++c)
        if (q(c) != 0.0) total -= q(c) * std::log(std::max(p(c), std::numeric_limits<double>::min()));
      out.grad.row(t).segment(g * classes, classes) = mass * p - q;
    }
  }
  out.value = total / static_cast<double>(T);
  out.grad /= static_cast<double>(T);
  return out;
}

LossResult mse_loss(const Matrix& predicted, const Matrix& reference) {
  if (predicted.rows() != reference.rows() || predicted.cols() != reference.cols()) {
    std::ostringstream msg;
    msg << "mse: shape " << predicted.rows() << "x" << predicted.cols() << " vs "
        << reference.rows() << "x" << reference.cols();
    throw ShapeError(msg.str());
  }
  const double n = static_cast<double>(predicted.size());
  if (n == 0.0) throw ShapeError("mse: empty input");
  const Matrix diff = predicted - reference;
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

// ---------------------------------------------------------------------------
// AdaGrad

AdaGrad::AdaGrad(const ParameterStore& store, AdaGradConfig config) : config_(config) {
  if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0))
    throw ValidationError("AdaGrad learning rate and epsilon must be positive");
  accumulators_.reserve(store.num_tensors());
  for (std::size_t i = 0; i < store.num_tensors(); ++i)
    accumulators_.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
}

void AdaGrad::step(ParameterStore& store) {
  if (accumulators_.size() != store.num_tensors())
    throw ShapeError("AdaGrad state does not match the parameter store");
  for (std::size_t i = 0; i < store.num_tensors(); ++i) {
    if (!store.grad(i).allFinite())
      throw Error("non-finite gradient in parameter '" + store.name(i) + "'; training aborted");
  }
  for (std::size_t i = 0; i < store.num_tensors(); ++i) {
    const Matrix& g = store.grad(i);
    Matrix& h = accumulators_[i];
    h.array() += g.array().square();
    store.mutable_value(i).array() -=
        config_.learning_rate * g.array() / (h.array().sqrt() + config_.epsilon);
  }
}

}  // namespace ppgvc
