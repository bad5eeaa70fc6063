// SPDX-License-Identifier: Apache-2.0
//
// Model checkpoints: a binary named-tensor container plus a text manifest.
// The binary layout is documented in docs/checkpoint_format.md.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppgvc/networks.hpp"

namespace ppgvc {

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct CheckpointData {
  ArchManifest manifest;
  std::vector<NamedTensor> tensors;
};

/// Parameters in store order, then (if given) AdaGrad accumulators named "adagrad:<param>".
CheckpointData make_checkpoint(const ParameterStore& store, const ArchManifest& manifest,
                               const AdaGrad* optimizer = nullptr);
/// Copies values by name; shapes must agree. Accumulators are restored when
/// `optimizer` is non-null and the checkpoint carries them.
void restore_checkpoint(const CheckpointData& data, ParameterStore& store,
                        AdaGrad* optimizer = nullptr);

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes, ArchManifest manifest = {});

/// Writes `path` (binary) and `path` + ".manifest" (text).
void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path);
CheckpointData read_checkpoint(const std::filesystem::path& path);

std::string format_manifest(const ArchManifest& manifest);
ArchManifest parse_manifest(const std::string& text);

}  // namespace ppgvc
