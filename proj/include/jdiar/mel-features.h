// include/jdiar/mel-features.h

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

#ifndef JDIAR_MEL_FEATURES_H_
#define JDIAR_MEL_FEATURES_H_

#include <vector>

#include "jdiar/tensor.h"
#include "jdiar/wav-io.h"

namespace jdiar {

// 64-dim log-Mel filterbanks, 25 ms Hann window, 10 ms shift, no
// pre-emphasis, no dither, no normalization: the front end is fully
// deterministic.
struct MelConfig {
  int num_mels = 64;
  double frame_shift_ms = 10.0;
  double frame_length_ms = 25.0;
  double fmin_hz = 20.0;
  double fmax_hz = 7600.0;
  double log_floor = 1e-10;

  void Validate(int sample_rate) const;
  int FrameShiftSamples(int sample_rate) const;
  int FrameLengthSamples(int sample_rate) const;
};

struct FeatureMatrix {
  Tensor values;             // T x num_mels log filterbank energies
  double frame_shift_ms = 10.0;
  double origin_offset_ms = 0.0;  // center time of frame 0

  int NumFrames() const { return values.rows(); }
  int Dim() const { return values.cols(); }
  // Center time of input frame i, in seconds.
  double FrameTimeSeconds(int i) const {
    return (origin_offset_ms + i * frame_shift_ms) / 1000.0;
  }
};

// T = floor((N - frame_length) / frame_shift) + 1 frames; raises
// ContractError when the audio is shorter than one frame.
FeatureMatrix ComputeLogMel(const AudioBuffer &audio, const MelConfig &cfg);

// HTK-style Mel scale, shared with the test oracles.
double HzToMel(double hz);
double MelToHz(double mel);

}  // namespace jdiar

#endif  // JDIAR_MEL_FEATURES_H_
