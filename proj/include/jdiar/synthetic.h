// include/jdiar/synthetic.h

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

#ifndef JDIAR_SYNTHETIC_H_
#define JDIAR_SYNTHETIC_H_

#include <string>
#include <vector>

#include "jdiar/annotation.h"
#include "jdiar/wav-io.h"

namespace jdiar {

// A speaker identity is a harmonic source plus three formant resonators
// and a spectral tilt; enough signal for embedding training while staying
// fully reproducible from the seed.
struct SyntheticSpeaker {
  double f0_hz = 0.0;
  double formants_hz[3] = {0.0, 0.0, 0.0};
  double bandwidths_hz[3] = {0.0, 0.0, 0.0};
  double tilt = 0.0;    // one-pole lowpass coefficient in [0, 1)
  double jitter = 0.0;  // relative f0 wobble amplitude
  uint64_t seed = 0;
};

SyntheticSpeaker SampleSpeaker(uint64_t seed);

// Sawtooth source at f0 (with slow jitter) through the speaker's formant
// resonators and tilt filter; 10 ms edge fades; peak normalized to 0.5.
// duration_s must be >= 0.2.
AudioBuffer RenderUtterance(const SyntheticSpeaker &speaker, double duration_s,
                            uint64_t seed);

struct ConversationConfig {
  int num_speakers = 3;
  double total_duration_s = 300.0;
  // Target timeline partition; defaults follow a conversational mix with
  // roughly a fifth of the time overlapped.
  double silence_ratio = 0.243;
  double single_ratio = 0.550;
  double overlap_ratio = 0.207;
  // Turn length distribution (log-normal, clamped).
  double turn_lognormal_mu = 0.6931471805599453;  // ln 2: median 2 s
  double turn_lognormal_sigma = 0.45;
  double min_turn_s = 0.6;
  double max_turn_s = 8.0;
  // Lead-in pause length (exponential); later gaps and overlap shifts are
  // sized by how far each component lags its target ratio.
  double gap_mean_s = 0.8;
  uint64_t seed = 0;

  void Validate() const;
};

struct Conversation {
  AudioBuffer audio;
  std::vector<SpeakerSegment> segments;  // exact ground truth
};

// Turn-taking sampler with closed-loop steering toward the configured
// silence/single/overlap ratios; realized ratios land within a few tenths
// of a point of the targets for long conversations. At most two speakers
// are ever active at once.
Conversation GenerateConversation(const std::vector<SyntheticSpeaker> &speakers,
                                  const std::vector<std::string> &speaker_names,
                                  const ConversationConfig &cfg);

// Fractions of the timeline that are silence / one speaker / overlap,
// rasterized at 10 ms.
struct TimelineRatios {
  double silence = 0.0;
  double single = 0.0;
  double overlap = 0.0;
};
TimelineRatios MeasureRatios(const std::vector<SpeakerSegment> &segments,
                             double total_duration_s);

// On-disk corpus for training and evaluation.
struct CorpusConfig {
  int num_speakers = 44;
  int utterances_per_speaker = 28;
  double utterance_duration_s = 6.0;
  int num_train_conversations = 12;
  int num_eval_conversations = 10;
  double train_conversation_s = 180.0;
  double eval_conversation_s = 240.0;
  int conversation_speakers = 3;
  // Speakers cast into one conversation keep their fundamentals at least
  // this ratio apart, like a casting director avoiding near-identical
  // voices.
  double min_f0_ratio = 1.15;
  ConversationConfig conversation;  // ratio and turn settings
  uint64_t seed = 7;
};

struct CorpusPaths {
  std::string root;
  std::string speaker_manifest;   // wav<TAB>speaker_id per line
  std::string diarized_manifest;  // wav<TAB>rttm per line
  std::vector<std::string> eval_wavs;
  std::vector<std::string> eval_rttms;
};

// Speaker utterances, diarization-annotated training conversations, and
// held-out evaluation conversations rendered by fresh speakers.
CorpusPaths SimulateCorpus(const std::string &out_dir, const CorpusConfig &cfg);

}  // namespace jdiar

#endif  // JDIAR_SYNTHETIC_H_
