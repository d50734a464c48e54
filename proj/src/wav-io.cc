// src/wav-io.cc

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

#include "jdiar/wav-io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace jdiar {

namespace {

uint32_t ReadU32(const uint8_t *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const uint8_t *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string &s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void PutU16(std::string &s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioBuffer ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_offset = 0, data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char *id = reinterpret_cast<const char *>(bytes.data() + pos);
    uint32_t chunk_size = ReadU32(bytes.data() + pos + 4);
    size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw FormatError("truncated wav chunk in " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("short fmt chunk in " + path);
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_offset = body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError("missing fmt chunk in " + path);
  if (data_offset == 0) throw FormatError("missing data chunk in " + path);
  if (format != 1) {
    throw FormatError("unsupported wav format in " + path +
                      ": audio_format=" + std::to_string(format));
  }
  if (channels != 1) {
    throw FormatError("unsupported wav format in " + path +
                      ": channels=" + std::to_string(channels));
  }
  if (bits != 16) {
    throw FormatError("unsupported wav format in " + path +
                      ": bits_per_sample=" + std::to_string(bits));
  }
  if (rate != kSampleRate) {
    throw FormatError("unsupported wav format in " + path +
                      ": sample_rate=" + std::to_string(rate));
  }

  AudioBuffer audio;
  audio.sample_rate = kSampleRate;
  const size_t num_samples = data_size / 2;
  audio.samples.resize(num_samples);
  for (size_t i = 0; i < num_samples; ++i) {
    const uint8_t *p = bytes.data() + data_offset + 2 * i;
    int16_t s = static_cast<int16_t>(p[0] | (p[1] << 8));
    audio.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return audio;
}

void WriteWav(const std::string &path, const AudioBuffer &audio) {
  const uint32_t data_size = static_cast<uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  PutU32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  PutU32(out, 16);
  PutU16(out, 1);   // PCM
  PutU16(out, 1);   // mono
  PutU32(out, static_cast<uint32_t>(audio.sample_rate));
  PutU32(out, static_cast<uint32_t>(audio.sample_rate) * 2);
  PutU16(out, 2);   // block align
  PutU16(out, 16);  // bits
  out.append("data");
  PutU32(out, data_size);
  for (double v : audio.samples) {
    double clipped = std::clamp(v, -1.0, 1.0);
    int s = static_cast<int>(std::lrint(clipped * 32767.0));
    PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(s)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write wav file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to wav file: " + path);
}

}  // namespace jdiar
