// src/archive.cc

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

#include "jdiar/archive.h"

#include <cmath>
#include <cstring>
#include <fstream>

namespace jdiar {

namespace {

constexpr char kArchiveMagic[4] = {'P', 'F', 'E', 'M'};

void WriteU32(std::ostream &os, uint32_t v) {
  os.write(reinterpret_cast<const char *>(&v), 4);
}

uint32_t ReadU32(std::istream &is, const char *what, const std::string &path) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char *>(&v), 4)) {
    throw FormatError("archive " + path + " truncated reading " + what);
  }
  return v;
}

void WriteFloats(std::ostream &os, const double *src, size_t n) {
  std::vector<float> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(src[i]);
  os.write(reinterpret_cast<const char *>(buf.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
}

void ReadFloats(std::istream &is, double *dst, size_t n, const char *what,
                const std::string &path) {
  std::vector<float> buf(n);
  if (!is.read(reinterpret_cast<char *>(buf.data()),
               static_cast<std::streamsize>(n * sizeof(float)))) {
    throw FormatError("archive " + path + " truncated reading " + what);
  }
  for (size_t i = 0; i < n; ++i) dst[i] = static_cast<double>(buf[i]);
}

}  // namespace

std::vector<double> ExtractionArchive::Timestamps() const {
  std::vector<double> ts(NumFrames());
  for (int i = 0; i < NumFrames(); ++i) ts[i] = TimestampSeconds(i);
  return ts;
}

ExtractionArchive ExtractionArchive::FromOutput(const PerFrameOutput &output) {
  ExtractionArchive arc;
  arc.period_ms = 80;
  arc.offset_ms = output.timestamps_s.empty()
                      ? 0
                      : static_cast<uint32_t>(output.timestamps_s[0] * 1000.0);
  arc.embeddings = output.embeddings;
  // Round everything through float32 immediately; the file adds nothing.
  for (size_t i = 0; i < arc.embeddings.size(); ++i) {
    arc.embeddings[i] = static_cast<double>(static_cast<float>(arc.embeddings[i]));
  }
  arc.vad_prob.resize(output.vad_prob.size());
  arc.osd_prob.resize(output.osd_prob.size());
  for (size_t i = 0; i < output.vad_prob.size(); ++i) {
    arc.vad_prob[i] = static_cast<double>(static_cast<float>(output.vad_prob[i]));
    arc.osd_prob[i] = static_cast<double>(static_cast<float>(output.osd_prob[i]));
  }
  return arc;
}

void ExtractionArchive::Save(const std::string &path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write archive: " + path);
  os.write(kArchiveMagic, 4);
  WriteU32(os, version);
  WriteU32(os, static_cast<uint32_t>(NumFrames()));
  WriteU32(os, static_cast<uint32_t>(Dim()));
  WriteU32(os, period_ms);
  WriteU32(os, offset_ms);
  WriteFloats(os, embeddings.data(), embeddings.size());
  WriteFloats(os, vad_prob.data(), vad_prob.size());
  WriteFloats(os, osd_prob.data(), osd_prob.size());
  if (!os) throw IoError("short write to archive: " + path);
}

ExtractionArchive ExtractionArchive::Load(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open archive: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kArchiveMagic, 4) != 0) {
    throw FormatError("bad archive magic in " + path);
  }
  ExtractionArchive arc;
  arc.version = ReadU32(is, "version", path);
  if (arc.version != 1) {
    throw FormatError("unsupported archive version in " + path);
  }
  const uint32_t frames = ReadU32(is, "frame count", path);
  const uint32_t dim = ReadU32(is, "dimension", path);
  arc.period_ms = ReadU32(is, "period", path);
  arc.offset_ms = ReadU32(is, "offset", path);
  arc.embeddings = Tensor({static_cast<int>(frames), static_cast<int>(dim)});
  arc.vad_prob.resize(frames);
  arc.osd_prob.resize(frames);
  ReadFloats(is, arc.embeddings.data(), arc.embeddings.size(), "embeddings",
             path);
  ReadFloats(is, arc.vad_prob.data(), frames, "vad", path);
  ReadFloats(is, arc.osd_prob.data(), frames, "osd", path);
  for (double p : arc.vad_prob) {
    if (p < 0.0 || p > 1.0) {
      throw FormatError("archive " + path + ": vad probability out of [0,1]");
    }
  }
  for (double p : arc.osd_prob) {
    if (p < 0.0 || p > 1.0) {
      throw FormatError("archive " + path + ": osd probability out of [0,1]");
    }
  }
  return arc;
}

}  // namespace jdiar
