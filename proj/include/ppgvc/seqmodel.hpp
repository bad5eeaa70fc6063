// SPDX-License-Identifier: Apache-2.0
//
// Minimal differentiable sequence-model core. Layers do not own parameters;
// they hold handles into a ParameterStore and accumulate gradients into it
// during backward passes. Every sequence is a T x dim matrix, one frame per row.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppgvc/common.hpp"
#include "ppgvc/corpus.hpp"

namespace ppgvc {

class ParameterStore {
 public:
  using Handle = std::size_t;

  Handle add(std::string name, Eigen::Index rows, Eigen::Index cols);

  std::size_t num_tensors() const { return entries_.size(); }
  std::size_t num_scalars() const;
  const std::string& name(Handle h) const { return entries_.at(h).name; }
  const Matrix& value(Handle h) const { return entries_[h].value; }
  Matrix& mutable_value(Handle h);
  const Matrix& grad(Handle h) const { return entries_[h].grad; }
  Matrix& grad(Handle h) { return entries_[h].grad; }
  Handle find(const std::string& name) const;

  /// Flat view over all tensors in insertion order (column-major inside each).
  double flat_value(std::size_t i) const;
  void set_flat_value(std::size_t i, double v);
  double flat_grad(std::size_t i) const;

  void zero_grad();
  void init_uniform(std::uint64_t seed, double range);
  bool all_finite() const;

  /// Bumped on every parameter write; forward traces record it so backward
  /// can reject stale activations.
  std::uint64_t generation() const { return generation_; }
  void touch() { ++generation_; }

 private:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
  };
  std::pair<std::size_t, Eigen::Index> locate(std::size_t i) const;

  std::vector<Entry> entries_;
  std::uint64_t generation_ = 0;
};

/// y = x W^T + b, applied frame-wise.
class Dense {
 public:
  Dense() = default;
  Dense(ParameterStore& store, const std::string& name, int in_dim, int out_dim);

  Matrix forward(const ParameterStore& store, const Matrix& x) const;
  /// Accumulates dW, db; returns dx.
  Matrix backward(ParameterStore& store, const Matrix& x, const Matrix& dy) const;

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  std::string name_;
  int in_dim_ = 0;
  int out_dim_ = 0;
  ParameterStore::Handle weight_ = 0;
  ParameterStore::Handle bias_ = 0;
};

enum class Direction { kForward, kBackward };

struct LstmState {
  Vector h;
  Vector c;
};

/// Activations of one LSTM pass, indexed by frame (not by processing order).
struct LstmTrace {
  Matrix input;   // T x in
  Matrix gates;   // T x 4H, post-activation [i f g o]
  Matrix cells;   // T x H
  Matrix hidden;  // T x H
  LstmState initial;
  std::uint64_t generation = 0;
  bool valid = false;
};

struct LstmGrads {
  Matrix dinput;
  LstmState dinitial;
};

/// Standard LSTM cell with forget gate:
///   i,f,o = sigmoid(.), g = tanh(.), c' = f*c + i*g, h' = o*tanh(c').
/// A backward-direction layer consumes frames from T-1 down to 0.
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParameterStore& store, const std::string& name, int in_dim, int hidden,
       Direction direction = Direction::kForward);

  LstmTrace forward(const ParameterStore& store, const Matrix& x,
                    const LstmState* initial = nullptr) const;
  /// State after the last processed frame (frame T-1 forward, frame 0 backward).
  LstmState final_state(const LstmTrace& trace) const;
  /// `dhidden` is the loss gradient w.r.t. every emitted hidden vector;
  /// `dfinal` optionally adds gradient w.r.t. the final (h, c).
  LstmGrads backward(ParameterStore& store, const LstmTrace& trace, const Matrix& dhidden,
                     const LstmState* dfinal = nullptr) const;

  /// Single step for autoregressive use; no trace kept.
  LstmState step(const ParameterStore& store, const Vector& x, const LstmState& prev) const;

  int in_dim() const { return in_dim_; }
  int hidden() const { return hidden_; }
  Direction direction() const { return direction_; }
  LstmState zero_state() const;

 private:
  void check_input(const Matrix& x) const;

  std::string name_;
  int in_dim_ = 0;
  int hidden_ = 0;
  Direction direction_ = Direction::kForward;
  ParameterStore::Handle w_input_ = 0;
  ParameterStore::Handle w_recurrent_ = 0;
  ParameterStore::Handle bias_ = 0;
};

struct BiLstmTrace {
  LstmTrace forward;
  LstmTrace backward;
  Matrix output;  // T x 2H, [forward | backward]
};

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParameterStore& store, const std::string& name, int in_dim, int hidden);

  BiLstmTrace forward(const ParameterStore& store, const Matrix& x) const;
  /// dfinal_* add gradient w.r.t. each direction's final state.
  Matrix backward(ParameterStore& store, const BiLstmTrace& trace, const Matrix& doutput,
                  const LstmState* dfinal_forward = nullptr,
                  const LstmState* dfinal_backward = nullptr) const;

  const Lstm& forward_layer() const { return fwd_; }
  const Lstm& backward_layer() const { return bwd_; }
  int out_dim() const { return 2 * fwd_.hidden(); }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

/// Softmax applied independently to kContextGroups consecutive blocks of
/// `classes` columns.
Matrix grouped_softmax(const Matrix& logits, int classes);
/// Maps gradient w.r.t. probabilities to gradient w.r.t. logits.
Matrix grouped_softmax_backward(const Matrix& probs, const Matrix& dprobs, int classes);

struct LossResult {
  double value = 0.0;
  Matrix grad;
};

/// Mean over frames of the summed per-group -log p(correct class).
/// `grad` is taken w.r.t. the LOGITS feeding the grouped softmax.
LossResult grouped_cross_entropy(const Matrix& probs, const LabelSequence& labels, int classes);
/// Soft-target variant; each group of `targets` must be a distribution.
LossResult grouped_cross_entropy(const Matrix& probs, const Matrix& targets, int classes);

/// Mean over frames and dimensions of the squared difference; grad w.r.t. `predicted`.
LossResult mse_loss(const Matrix& predicted, const Matrix& reference);

struct AdaGradConfig {
  double learning_rate = 0.01;
  double epsilon = 1e-8;
};

/// h <- h + g^2;  theta <- theta - lr * g / (sqrt(h) + eps).
class AdaGrad {
 public:
  AdaGrad() = default;
  AdaGrad(const ParameterStore& store, AdaGradConfig config);

  /// Throws Error when any gradient is non-finite; parameters are untouched then.
  void step(ParameterStore& store);

  const AdaGradConfig& config() const { return config_; }
  const std::vector<Matrix>& accumulators() const { return accumulators_; }
  std::vector<Matrix>& accumulators() { return accumulators_; }

 private:
  AdaGradConfig config_;
  std::vector<Matrix> accumulators_;
};

}  // namespace ppgvc
