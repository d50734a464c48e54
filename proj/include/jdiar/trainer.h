// include/jdiar/trainer.h

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

#ifndef JDIAR_TRAINER_H_
#define JDIAR_TRAINER_H_

#include <string>
#include <vector>

#include "jdiar/annotation.h"
#include "jdiar/joint-model.h"
#include "jdiar/losses.h"
#include "jdiar/mel-features.h"
#include "jdiar/plda.h"

namespace jdiar {

// Per-output-frame supervision; osd == 1 implies vad == 1.
struct FrameLabels {
  std::vector<int> vad;
  std::vector<int> osd;
};

// Speaker activity evaluated at each output frame's center time:
// vad = 1 iff >= 1 active speaker, osd = 1 iff >= 2.
FrameLabels DeriveFrameLabels(const std::vector<SpeakerSegment> &segments,
                              int num_frames, double period_ms,
                              double origin_offset_ms);

// Single speaker per utterance, assumed fully speech.
struct SpeakerUtterance {
  std::string wav_path;
  int speaker_id = 0;
};

struct SpeakerCorpus {
  std::vector<SpeakerUtterance> utterances;
  std::vector<std::string> speaker_names;  // class index -> name

  int NumSpeakers() const { return static_cast<int>(speaker_names.size()); }
};

// Lines of `wav_path<TAB>speaker_id`; class indices assigned in sorted
// speaker-name order.
SpeakerCorpus LoadSpeakerManifest(const std::string &path);

struct DiarizedRecording {
  std::string wav_path;
  std::vector<SpeakerSegment> segments;
};

struct DiarizedCorpus {
  std::vector<DiarizedRecording> recordings;
};

// Lines of `wav_path<TAB>rttm_path`.
DiarizedCorpus LoadDiarizedManifest(const std::string &path);

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double max_grad_norm = 5.0;  // global-norm clip; 0 disables
  int speaker_batch = 4;   // utterances per AAM batch
  int diarized_batch = 2;  // crops per VAD/OSD batch
  int stage1_epochs = 2;
  int stage2_epochs = 2;
  double crop_seconds = 6.0;
  uint64_t seed = 1;
  LossWeights weights;
  double aam_scale = 32.0;
  double aam_margin = 0.2;
  MelConfig mel;
  std::string log_path;  // CSV `epoch,step,l_aam,l_vad,l_osd,total`
};

struct TrainLogEntry {
  int epoch = 0;
  int step = 0;
  double l_aam = 0.0;
  double l_vad = 0.0;
  double l_osd = 0.0;
  double total = 0.0;
};

// Stage 1: AAM-only training of the per-frame model on the speaker
// corpus; the VAD/OSD heads are untouched.
std::vector<TrainLogEntry> TrainStage1(JointModel &model,
                                       const SpeakerCorpus &corpus,
                                       const TrainConfig &cfg);

// Stage 2: each step pairs one speaker batch (AAM) with one diarized
// batch (VAD + speech-masked OSD) in a single weighted-sum loss and one
// optimizer step.
std::vector<TrainLogEntry> TrainStage2(JointModel &model,
                                       const SpeakerCorpus &speakers,
                                       const DiarizedCorpus &diarized,
                                       const TrainConfig &cfg);

// Stage-2 schedule with a target-domain corpus supplying the VAD/OSD
// batches; AAM batches still come from the speaker corpus.
std::vector<TrainLogEntry> FinetuneVadOsd(JointModel &model,
                                          const SpeakerCorpus &speakers,
                                          const DiarizedCorpus &target,
                                          const TrainConfig &cfg);

// Per-utterance decision by mean cosine score over frames.
double SpeakerClassificationAccuracy(const JointModel &model,
                                     const SpeakerCorpus &corpus,
                                     const MelConfig &mel);

struct FrameAccuracy {
  double vad = 0.0;  // over all frames
  double osd = 0.0;  // over reference speech frames
};

// Thresholds probabilities at 0.5 against derived reference labels.
FrameAccuracy EvaluateFrameAccuracy(const JointModel &model,
                                    const DiarizedCorpus &corpus,
                                    const MelConfig &mel);

void WriteTrainLog(const std::string &path,
                   const std::vector<TrainLogEntry> &entries);

struct PldaExtractionConfig {
  double crop_seconds = 6.0;
  int utterances_per_speaker = 12;
  uint64_t seed = 1;
};

// One random per-frame embedding per (speaker, utterance) from a random
// crop, length-normalized, then two-covariance EM.
PLDAModel TrainPldaOnSpeakerCorpus(const JointModel &model,
                                   const SpeakerCorpus &corpus,
                                   const MelConfig &mel,
                                   const PldaExtractionConfig &cfg);

}  // namespace jdiar

#endif  // JDIAR_TRAINER_H_
