// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/networks.hpp"

namespace ppgvc {

namespace {

int manifest_int(const ArchManifest& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw FormatError("architecture manifest lacks '" + key + "'");
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw FormatError("architecture manifest: bad integer for '" + key + "'");
  }
}

void expect_kind(const ArchManifest& m, const std::string& kind) {
  auto it = m.find("kind");
  if (it == m.end() || it->second != kind)
    throw FormatError("architecture manifest: expected kind '" + kind + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

FrameClassifier::FrameClassifier(const Arch& arch) : arch_(arch) {
  if (arch.input_dim < 1 || arch.hidden < 1 || arch.classes < 1)
    throw ShapeError("classifier: dimensions must be >= 1");
  rnn_ = BiLstm(params_, "rec.rnn", arch.input_dim, arch.hidden);
  head_ = Dense(params_, "rec.head", 2 * arch.hidden, kContextGroups * arch.classes);
}

FrameClassifier::Trace FrameClassifier::forward(const Matrix& input) const {
  Trace tr;
  tr.rnn = rnn_.forward(params_, input);
  tr.posteriors = grouped_softmax(head_.forward(params_, tr.rnn.output), arch_.classes);
  return tr;
}

Matrix FrameClassifier::backward(const Trace& trace, const Matrix& dlogits) {
  const Matrix drnn = head_.backward(params_, trace.rnn.output, dlogits);
  return rnn_.backward(params_, trace.rnn, drnn);
}

ArchManifest FrameClassifier::manifest() const {
  return {{"kind", "frame_classifier"},
          {"input_dim", std::to_string(arch_.input_dim)},
          {"hidden", std::to_string(arch_.hidden)},
          {"classes", std::to_string(arch_.classes)}};
}

FrameClassifier::Arch FrameClassifier::arch_from_manifest(const ArchManifest& m) {
  expect_kind(m, "frame_classifier");
  return {manifest_int(m, "input_dim"), manifest_int(m, "hidden"), manifest_int(m, "classes")};
}

// ---------------------------------------------------------------------------

FrameRegressor::FrameRegressor(const Arch& arch) : arch_(arch) {
  if (arch.input_dim < 1 || arch.hidden < 1 || arch.output_dim < 1)
    throw ShapeError("regressor: dimensions must be >= 1");
  rnn_ = BiLstm(params_, "syn.rnn", arch.input_dim, arch.hidden);
  head_ = Dense(params_, "syn.head", 2 * arch.hidden, arch.output_dim);
}

FrameRegressor::Trace FrameRegressor::forward(const Matrix& input) const {
  Trace tr;
  tr.rnn = rnn_.forward(params_, input);
  tr.output = head_.forward(params_, tr.rnn.output);
  return tr;
}

Matrix FrameRegressor::backward(const Trace& trace, const Matrix& doutput) {
  const Matrix drnn = head_.backward(params_, trace.rnn.output, doutput);
  return rnn_.backward(params_, trace.rnn, drnn);
}

ArchManifest FrameRegressor::manifest() const {
  return {{"kind", "frame_regressor"},
          {"input_dim", std::to_string(arch_.input_dim)},
          {"hidden", std::to_string(arch_.hidden)},
          {"output_dim", std::to_string(arch_.output_dim)}};
}

FrameRegressor::Arch FrameRegressor::arch_from_manifest(const ArchManifest& m) {
  expect_kind(m, "frame_regressor");
  return {manifest_int(m, "input_dim"), manifest_int(m, "hidden"), manifest_int(m, "output_dim")};
}

// ---------------------------------------------------------------------------

PosteriorEncoderDecoder::PosteriorEncoderDecoder(const Arch& arch) : arch_(arch) {
  if (arch.classes < 1 || arch.hidden < 1) throw ShapeError("converter: dimensions must be >= 1");
  const int width = kContextGroups * arch.classes;
  encoder_ = BiLstm(params_, "conv.encoder", width + arch.classes, arch.hidden);
  decoder_ = Lstm(params_, "conv.decoder", decoder_input_dim(), 2 * arch.hidden);
  head_ = Dense(params_, "conv.head", 2 * arch.hidden, width);
}

Matrix PosteriorEncoderDecoder::encoder_input(const Matrix& source, int phoneme) const {
  if (source.cols() != posterior_dim())
    throw ShapeError("layer 'conv.encoder': source posterior width mismatch");
  if (phoneme < 0 || phoneme >= arch_.classes) throw ShapeError("converter: phoneme out of range");
  Matrix in = Matrix::Zero(source.rows(), posterior_dim() + arch_.classes);
  in.leftCols(posterior_dim()) = source;
  in.col(posterior_dim() + phoneme).setOnes();
  return in;
}

int PosteriorEncoderDecoder::decoder_input_dim() const {
  return posterior_dim() + (arch_.progress_inputs ? kProgressInputs : 0);
}

Eigen::RowVector3d PosteriorEncoderDecoder::progress(int t, int length) {
  constexpr double horizon = 8.0;
  return {(t + 0.5) / length, std::min(t, 8) / horizon, std::min(length - 1 - t, 8) / horizon};
}

LstmState PosteriorEncoderDecoder::encode(const BiLstmTrace& enc) const {
  const LstmState f = encoder_.forward_layer().final_state(enc.forward);
  const LstmState b = encoder_.backward_layer().final_state(enc.backward);
  const int H = arch_.hidden;
  LstmState s{Vector(2 * H), Vector(2 * H)};
  s.h << f.h, b.h;
  s.c << f.c, b.c;
  return s;
}

PosteriorEncoderDecoder::Trace PosteriorEncoderDecoder::forward(const Matrix& source, int phoneme,
                                                                const Matrix& target) const {
  if (target.rows() < 1 || target.cols() != posterior_dim())
    throw ShapeError("layer 'conv.decoder': target shape mismatch");
  Trace tr;
  tr.encoder = encoder_.forward(params_, encoder_input(source, phoneme));
  const LstmState init = encode(tr.encoder);
  const int L = static_cast<int>(target.rows());
  Matrix dec_in = Matrix::Zero(L, decoder_input_dim());
  if (L > 1) dec_in.block(1, 0, L - 1, posterior_dim()) = target.topRows(L - 1);
  if (arch_.progress_inputs)
    for (int t = 0; t < L; ++t) dec_in.row(t).tail(kProgressInputs) = progress(t, L);
  tr.decoder = decoder_.forward(params_, dec_in, &init);
  tr.posteriors = grouped_softmax(head_.forward(params_, tr.decoder.hidden), arch_.classes);
  return tr;
}

Matrix PosteriorEncoderDecoder::generate(const Matrix& source, int phoneme, int length) const {
  if (length < 1) throw ShapeError("converter: output length must be >= 1");
  const BiLstmTrace enc = encoder_.forward(params_, encoder_input(source, phoneme));
  LstmState state = encode(enc);
  Matrix out(length, posterior_dim());
  Eigen::RowVectorXd in = Eigen::RowVectorXd::Zero(decoder_input_dim());
  for (int t = 0; t < length; ++t) {
    if (arch_.progress_inputs) in.tail(kProgressInputs) = progress(t, length);
    state = decoder_.step(params_, in.transpose(), state);
    const Matrix logits = head_.forward(params_, state.h.transpose());
    out.row(t) = grouped_softmax(logits, arch_.classes).row(0);
    in.head(posterior_dim()) = out.row(t);
  }
  return out;
}

void PosteriorEncoderDecoder::backward(const Trace& trace, const Matrix& dlogits) {
  const Matrix ddec = head_.backward(params_, trace.decoder.hidden, dlogits);
  const LstmGrads dg = decoder_.backward(params_, trace.decoder, ddec);
  const int H = arch_.hidden;
  const LstmState df{dg.dinitial.h.head(H), dg.dinitial.c.head(H)};
  const LstmState db{dg.dinitial.h.tail(H), dg.dinitial.c.tail(H)};
  const Matrix zero = Matrix::Zero(trace.encoder.output.rows(), 2 * H);
  encoder_.backward(params_, trace.encoder, zero, &df, &db);
}

ArchManifest PosteriorEncoderDecoder::manifest() const {
  return {{"kind", "posterior_encoder_decoder"},
          {"classes", std::to_string(arch_.classes)},
          {"hidden", std::to_string(arch_.hidden)},
          {"progress_inputs", arch_.progress_inputs ? "1" : "0"}};
}

PosteriorEncoderDecoder::Arch PosteriorEncoderDecoder::arch_from_manifest(const ArchManifest& m) {
  expect_kind(m, "posterior_encoder_decoder");
  const auto it = m.find("progress_inputs");
  return {manifest_int(m, "classes"), manifest_int(m, "hidden"), it == m.end() || it->second != "0"};
}

}  // namespace ppgvc
