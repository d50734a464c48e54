// include/jdiar/joint-model.h

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

#ifndef JDIAR_JOINT_MODEL_H_
#define JDIAR_JOINT_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "jdiar/autodiff.h"
#include "jdiar/mel-features.h"
#include "jdiar/tensor.h"

namespace jdiar {

// One output frame per subsample_factor input frames; with 10 ms input
// frames and factor 8 this is one embedding every 80 ms.
struct EncoderConfig {
  int input_dim = 64;
  int context_frames = 12;  // +-k input frames seen per output frame
  std::vector<int> hidden_dims = {256, 256, 512};
  int subsample_factor = 8;
  int embed_dim = 256;
  // Fixed affine input normalization (x - offset) / scale, chosen for the
  // dynamic range of log-Mel features; part of the model, not the
  // front-end.
  double input_offset = -10.0;
  double input_scale = 6.0;

  void Validate() const;
  int LastHiddenDim() const { return hidden_dims.back(); }
  std::string HiddenDimsString() const;
};

enum class ModelMode { kPerSegment, kPerFrame };

std::string ModeName(ModelMode mode);

struct PerFrameOutput {
  Tensor embeddings;                 // T' x embed_dim
  std::vector<double> vad_prob;      // strictly inside (0, 1)
  std::vector<double> osd_prob;      // p(overlap | speech), inside (0, 1)
  std::vector<double> timestamps_s;  // center time of output frame i

  int NumFrames() const { return embeddings.rows(); }
};

// Counts encoder invocations; used by the single-pass tests and the
// extraction benchmark.
struct ForwardStats {
  long encoder_passes = 0;
};

// Shared frame-stacking feed-forward encoder with either a statistical
// pooling head (per-segment mode) or a per-frame projection plus VAD/OSD
// heads (per-frame mode). The AAM classifier exists in both modes and is
// used only during training.
class JointModel {
 public:
  JointModel() = default;

  static JointModel Create(const EncoderConfig &cfg, ModelMode mode,
                           int num_classes, uint64_t seed);

  ModelMode mode() const { return mode_; }
  const EncoderConfig &config() const { return cfg_; }
  int num_classes() const { return num_classes_; }
  uint64_t seed() const { return seed_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  // T' = floor(T / subsample_factor); trailing remainder frames dropped.
  int OutputFrameCount(int input_frames) const {
    return input_frames < 0 ? 0 : input_frames / cfg_.subsample_factor;
  }

  // Encoder activations (T' x last_hidden) before any projection.
  Tensor EncoderForward(const Tensor &features, ForwardStats *stats = nullptr) const;

  // Per-frame mode only; input must span at least one output frame.
  PerFrameOutput ForwardPerFrame(const FeatureMatrix &features,
                                 ForwardStats *stats = nullptr) const;

  // Per-segment mode only; [start_s, end_s) must contain at least
  // subsample_factor input frames. Returns one embed_dim vector.
  std::vector<double> ForwardPerSegment(const FeatureMatrix &features,
                                        double start_s, double end_s,
                                        ForwardStats *stats = nullptr) const;

  // Copies encoder parameters verbatim, drops the pooling projection, and
  // freshly initializes the per-frame projection, heads and classifier
  // from head_seed. Input must be a per-segment model.
  JointModel ConvertToPerFrame(uint64_t head_seed) const;

  // Taped forwards for training; same kernels, bit-identical activations.
  Var EncoderForwardTaped(Tape &tape, Var features) const;
  Var EmbeddingsTaped(Tape &tape, Var encoder_out) const;  // per-frame
  Var VadLogitTaped(Tape &tape, Var embeddings) const;     // T' x 1
  Var OsdLogitTaped(Tape &tape, Var embeddings) const;
  Var VadProbTaped(Tape &tape, Var embeddings) const;      // sigmoid of logit
  Var OsdProbTaped(Tape &tape, Var embeddings) const;

  // Versioned binary checkpoint, bit-exact round-trip.
  void Save(const std::string &path) const;
  static JointModel Load(const std::string &path);

  // Input frame rows whose centers fall in [start_s, end_s).
  std::pair<int, int> FrameRange(const FeatureMatrix &features, double start_s,
                                 double end_s) const;

 private:
  void InitHeads(Rng &rng);

  EncoderConfig cfg_;
  ModelMode mode_ = ModelMode::kPerSegment;
  int num_classes_ = 0;
  uint64_t seed_ = 0;
  ParameterSet params_;
};

}  // namespace jdiar

#endif  // JDIAR_JOINT_MODEL_H_
