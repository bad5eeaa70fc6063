// SPDX-License-Identifier: Apache-2.0
//
// "PPGF" binary feature files. Layout, all integers little-endian:
//
//   offset  size  field
//        0     4  magic "PPGF"
//        4     4  u32 version (= 1)
//        8     4  u32 frame count T
//       12     4  u32 dimension D
//       16     4  u32 frame shift in microseconds
//       20     8  u64 payload size in bytes (= 4 * T * D)
//       28   4TD  T x D row-major IEEE-754 binary32 values
//
// Segmentations live in a sibling text file with one "<start> <end> <phoneme>"
// line per span.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ppgvc/corpus.hpp"

namespace ppgvc {

inline constexpr std::size_t kFeatureHeaderBytes = 28;

std::vector<std::uint8_t> encode_features(const Matrix& frames, double frame_shift_ms);
/// Throws FormatError naming the byte offset of the first problem.
FeatureSequence decode_features(std::span<const std::uint8_t> bytes);

void write_feature_file(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence read_feature_file(const std::filesystem::path& path);

void write_span_file(const PhonemeSegmentation& seg, const PhonemeInventory& inventory,
                     const std::filesystem::path& path);
PhonemeSegmentation read_span_file(const std::filesystem::path& path,
                                   const PhonemeInventory& inventory);

}  // namespace ppgvc
