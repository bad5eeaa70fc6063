// SPDX-License-Identifier: Apache-2.0
//
// The three network shapes used by the conversion pipeline. Each owns its
// ParameterStore, so copies are independent models.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ppgvc/seqmodel.hpp"

namespace ppgvc {

/// Key/value description written next to checkpoints.
using ArchManifest = std::map<std::string, std::string>;

/// BiLSTM -> dense -> grouped softmax. Used for the recognizer.
class FrameClassifier {
 public:
  struct Arch {
    int input_dim = 0;
    int hidden = 32;
    int classes = 0;  // per group
  };
  struct Trace {
    BiLstmTrace rnn;
    Matrix posteriors;  // T x 5K
  };

  FrameClassifier() = default;
  explicit FrameClassifier(const Arch& arch);

  Trace forward(const Matrix& input) const;
  Matrix predict(const Matrix& input) const { return forward(input).posteriors; }
  /// Accumulates parameter gradients; returns d(input).
  Matrix backward(const Trace& trace, const Matrix& dlogits);

  const Arch& arch() const { return arch_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  ArchManifest manifest() const;
  static Arch arch_from_manifest(const ArchManifest& m);

 private:
  Arch arch_;
  ParameterStore params_;
  BiLstm rnn_;
  Dense head_;
};

/// BiLSTM -> dense (linear output). Used for the synthesizer.
class FrameRegressor {
 public:
  struct Arch {
    int input_dim = 0;
    int hidden = 32;
    int output_dim = 0;
  };
  struct Trace {
    BiLstmTrace rnn;
    Matrix output;
  };

  FrameRegressor() = default;
  explicit FrameRegressor(const Arch& arch);

  Trace forward(const Matrix& input) const;
  Matrix predict(const Matrix& input) const { return forward(input).output; }
  Matrix backward(const Trace& trace, const Matrix& doutput);

  const Arch& arch() const { return arch_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  ArchManifest manifest() const;
  static Arch arch_from_manifest(const ArchManifest& m);

 private:
  Arch arch_;
  ParameterStore params_;
  BiLstm rnn_;
  Dense head_;
};

/// Attention-free encoder-decoder over posterior segments.
///
/// Encoder: BiLSTM over [source posterior frame | phoneme one-hot]. The final
/// forward and backward states, concatenated, initialize a unidirectional
/// decoder LSTM of width 2H. Decoder input at step t is the posterior frame
/// emitted at t-1 (zeros at t = 0) followed, when progress_inputs is set, by
/// (t + 0.5) / L, min(t, 8) / 8 and min(L - 1 - t, 8) / 8 for the imposed
/// length L. The decoder output goes through dense + grouped softmax.
class PosteriorEncoderDecoder {
 public:
  struct Arch {
    int classes = 0;  // per group; posterior width is 5 * classes
    int hidden = 32;  // encoder width per direction
    bool progress_inputs = true;
  };
  static constexpr int kProgressInputs = 3;
  struct Trace {
    BiLstmTrace encoder;
    LstmTrace decoder;
    Matrix posteriors;
  };

  PosteriorEncoderDecoder() = default;
  explicit PosteriorEncoderDecoder(const Arch& arch);

  int posterior_dim() const { return kContextGroups * arch_.classes; }

  /// Teacher-forced pass: the decoder is fed `target` shifted by one frame and
  /// unrolled for target.rows() steps.
  Trace forward(const Matrix& source, int phoneme, const Matrix& target) const;
  /// Autoregressive generation of exactly `length` frames.
  Matrix generate(const Matrix& source, int phoneme, int length) const;
  /// Accumulates parameter gradients for a teacher-forced trace.
  void backward(const Trace& trace, const Matrix& dlogits);

  const Arch& arch() const { return arch_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  ArchManifest manifest() const;
  static Arch arch_from_manifest(const ArchManifest& m);

 private:
  Matrix encoder_input(const Matrix& source, int phoneme) const;
  int decoder_input_dim() const;
  static Eigen::RowVector3d progress(int t, int length);
  LstmState encode(const BiLstmTrace& enc) const;

  Arch arch_;
  ParameterStore params_;
  BiLstm encoder_;
  Lstm decoder_;
  Dense head_;
};

}  // namespace ppgvc
