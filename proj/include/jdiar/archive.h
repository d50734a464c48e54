// include/jdiar/archive.h

// Copyright 2026  Jdiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef JDIAR_ARCHIVE_H_
#define JDIAR_ARCHIVE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "jdiar/joint-model.h"
#include "jdiar/tensor.h"

namespace jdiar {

// Single-pass extraction output: per-frame embeddings plus VAD and OSD
// probabilities. On disk: magic "PFEM", version u32, T' u32, D u32,
// period_ms u32, offset_ms u32, then float32 embeddings (row-major), vad
// and osd, all little-endian. In-memory values are already rounded
// through float32, so save/load round-trips bit-exactly and staged runs
// match fused ones.
struct ExtractionArchive {
  uint32_t version = 1;
  uint32_t period_ms = 80;
  uint32_t offset_ms = 0;
  Tensor embeddings;  // T' x D
  std::vector<double> vad_prob;
  std::vector<double> osd_prob;

  int NumFrames() const { return embeddings.rows(); }
  int Dim() const { return embeddings.cols(); }
  double TimestampSeconds(int i) const {
    return (offset_ms + static_cast<double>(i) * period_ms) / 1000.0;
  }
  std::vector<double> Timestamps() const;

  static ExtractionArchive FromOutput(const PerFrameOutput &output);

  void Save(const std::string &path) const;
  static ExtractionArchive Load(const std::string &path);
};

}  // namespace jdiar

#endif  // JDIAR_ARCHIVE_H_
