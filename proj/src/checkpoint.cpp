// SPDX-License-Identifier: Apache-2.0
#include "ppgvc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ppgvc {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kAccumulatorPrefix = "adagrad:";

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t read(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::string read_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << "checkpoint format error at byte offset " << pos_ << ": " << what;
    throw FormatError(msg.str());
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("truncated data");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

CheckpointData make_checkpoint(const ParameterStore& store, const ArchManifest& manifest,
                               const AdaGrad* optimizer) {
  CheckpointData data;
  data.manifest = manifest;
  for (std::size_t i = 0; i < store.num_tensors(); ++i)
    data.tensors.push_back({store.name(i), store.value(i)});
  if (optimizer) {
    const auto& acc = optimizer->accumulators();
    for (std::size_t i = 0; i < acc.size(); ++i)
      data.tensors.push_back({kAccumulatorPrefix + store.name(i), acc[i]});
  }
  return data;
}

void restore_checkpoint(const CheckpointData& data, ParameterStore& store, AdaGrad* optimizer) {
  auto lookup = [&](const std::string& name) -> const Matrix* {
    for (const auto& t : data.tensors)
      if (t.name == name) return &t.value;
    return nullptr;
  };
  for (std::size_t i = 0; i < store.num_tensors(); ++i) {
    const Matrix* v = lookup(store.name(i));
    if (!v) throw FormatError("checkpoint lacks tensor '" + store.name(i) + "'");
    if (v->rows() != store.value(i).rows() || v->cols() != store.value(i).cols())
      throw FormatError("checkpoint tensor '" + store.name(i) + "' has the wrong shape");
    store.mutable_value(i) = *v;
  }
  if (optimizer) {
    auto& acc = optimizer->accumulators();
    for (std::size_t i = 0; i < store.num_tensors() && i < acc.size(); ++i)
      if (const Matrix* v = lookup(kAccumulatorPrefix + store.name(i))) acc[i] = *v;
  }
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(data.tensors.size()));
  for (const auto& t : data.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
  }
  for (const auto& t : data.tensors)
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c)
        put_u64(out, std::bit_cast<std::uint64_t>(t.value(r, c)));
  return out;
}

CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes, ArchManifest manifest) {
  Reader in(bytes);
  if (in.read_string(4) != std::string(kMagic, 4)) {
    throw FormatError("checkpoint format error at byte offset 0: bad magic");
  }
  if (in.read(4) != kVersion) in.fail("unsupported version");
  const auto n = in.read(4);
  CheckpointData data;
  data.manifest = std::move(manifest);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = in.read(4);
    NamedTensor t;
    t.name = in.read_string(len);
    const auto rows = in.read(4);
    const auto cols = in.read(4);
    t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    data.tensors.push_back(std::move(t));
  }
  for (auto& t : data.tensors)
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c)
        t.value(r, c) = std::bit_cast<double>(in.read(8));
  if (in.remaining() != 0) in.fail("trailing bytes");
  return data;
}

std::string format_manifest(const ArchManifest& manifest) {
  std::ostringstream out;
  for (const auto& [k, v] : manifest) out << k << '=' << v << '\n';
  return out.str();
}

ArchManifest parse_manifest(const std::string& text) {
  ArchManifest m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest line without '=': " + line);
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(data);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  std::ofstream man(path.string() + ".manifest", std::ios::trunc);
  if (!man) throw Error("cannot write manifest for " + path.string());
  man << format_manifest(data.manifest);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  std::ifstream man(path.string() + ".manifest");
  if (!man) throw Error("missing manifest for " + path.string());
  std::stringstream text;
  text << man.rdbuf();
  return decode_checkpoint(bytes, parse_manifest(text.str()));
}

}  // namespace ppgvc
