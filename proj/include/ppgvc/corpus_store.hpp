// SPDX-License-Identifier: Apache-2.0
//
// Corpus directory layout:
//
//   corpus.txt                      inventory, speaker count, utterance ids
//   <split>/<id>.<speaker>.ppgf     features
//   <split>/<id>.<speaker>.exc.ppgf excitation, D = 2 (log-F0, aperiodicity)
//   <split>/<id>.<speaker>.spans    segmentation
//
// Labels are rebuilt from the spans on read.
#pragma once

#include <filesystem>

#include "ppgvc/corpus.hpp"

namespace ppgvc {

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace ppgvc
