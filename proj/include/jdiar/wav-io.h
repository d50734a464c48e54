// include/jdiar/wav-io.h

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

#ifndef JDIAR_WAV_IO_H_
#define JDIAR_WAV_IO_H_

#include <string>
#include <vector>

#include "jdiar/common.h"

namespace jdiar {

inline constexpr int kSampleRate = 16000;

// Mono 16 kHz audio, samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Only RIFF/WAVE, 16-bit signed PCM, 1 channel, 16000 Hz is accepted.
// Samples are scaled by 1/32768. Anything else raises FormatError naming
// the offending property; a missing file raises IoError.
AudioBuffer ReadWav(const std::string &path);

// 16-bit PCM mono writer; samples clipped to [-1, 1] and rounded.
void WriteWav(const std::string &path, const AudioBuffer &audio);

}  // namespace jdiar

#endif  // JDIAR_WAV_IO_H_
