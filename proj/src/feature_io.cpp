// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ppgvc {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(bytes[offset + i]) << (8 * i);
  return value;
}

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
  std::ostringstream msg;
  msg << "PPGF format error at byte offset " << offset << ": " << what;
  throw FormatError(msg.str());
}

}  // namespace

std::vector<std::uint8_t> encode_features(const Matrix& frames, double frame_shift_ms) {
  if (!frames.allFinite()) throw ValidationError("cannot write non-finite feature values");
  if (!(frame_shift_ms > 0.0)) throw ValidationError("frame shift must be positive");
  const auto rows = static_cast<std::uint32_t>(frames.rows());
  const auto cols = static_cast<std::uint32_t>(frames.cols());
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderBytes + 4ull * rows * cols);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, rows);
  put_le<std::uint32_t>(out, cols);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(std::lround(frame_shift_ms * 1000.0)));
  put_le<std::uint64_t>(out, 4ull * rows * cols);
  for (std::uint32_t t = 0; t < rows; ++t)
    for (std::uint32_t d = 0; d < cols; ++d)
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(frames(t, d))));
  return out;
}

FeatureSequence decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFeatureHeaderBytes) format_error(bytes.size(), "truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) format_error(0, "bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kVersion) format_error(4, "unsupported version " + std::to_string(version));
  const auto rows = get_le<std::uint32_t>(bytes, 8);
  const auto cols = get_le<std::uint32_t>(bytes, 12);
  const auto shift_us = get_le<std::uint32_t>(bytes, 16);
  const auto payload = get_le<std::uint64_t>(bytes, 20);
  if (rows < 1) format_error(8, "frame count is zero");
  if (shift_us == 0) format_error(16, "frame shift is zero");
  if (payload != 4ull * rows * cols) format_error(20, "payload size disagrees with T x D");
  if (bytes.size() < kFeatureHeaderBytes + payload)
    format_error(bytes.size(), "truncated payload");
  if (bytes.size() > kFeatureHeaderBytes + payload)
    format_error(kFeatureHeaderBytes + payload, "trailing bytes after payload");

  FeatureSequence seq;
  seq.frame_shift_ms = shift_us / 1000.0;
  seq.frames.resize(rows, cols);
  std::size_t offset = kFeatureHeaderBytes;
  for (std::uint32_t t = 0; t < rows; ++t) {
    for (std::uint32_t d = 0; d < cols; ++d, offset += 4) {
      const float v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
      if (!std::isfinite(v)) format_error(offset, "non-finite value");
      seq.frames(t, d) = v;
    }
  }
  return seq;
}

void write_feature_file(const FeatureSequence& seq, const std::filesystem::path& path) {
  const auto bytes = encode_features(seq.frames, seq.frame_shift_ms);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

FeatureSequence read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_span_file(const PhonemeSegmentation& seg, const PhonemeInventory& inventory,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& s : seg.spans) out << s.start << ' ' << s.end << ' ' << inventory.name(s.phoneme) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

PhonemeSegmentation read_span_file(const std::filesystem::path& path,
                                   const PhonemeInventory& inventory) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  PhonemeSegmentation seg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Span span;
    std::string phoneme;
    if (!(fields >> span.start >> span.end >> phoneme))
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed span line");
    span.phoneme = inventory.index_of(phoneme);
    seg.spans.push_back(span);
  }
  try {
    seg.validate(seg.total_frames());
  } catch (const ValidationError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return seg;
}

}  // namespace ppgvc
