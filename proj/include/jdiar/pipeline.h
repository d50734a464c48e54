// include/jdiar/pipeline.h

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

#ifndef JDIAR_PIPELINE_H_
#define JDIAR_PIPELINE_H_

#include <string>
#include <vector>

#include "jdiar/annotation.h"
#include "jdiar/archive.h"
#include "jdiar/der-metrics.h"
#include "jdiar/joint-model.h"
#include "jdiar/plda.h"
#include "jdiar/rttm.h"
#include "jdiar/vbx.h"

namespace jdiar {

struct BinarizeConfig {
  double vad_threshold = 0.5;
  double osd_threshold = 0.5;
  double min_speech_s = 0.2;
  double min_silence_s = 0.1;
  double min_overlap_s = 0.1;

  void Validate() const;
};

// Threshold, then remove positive runs shorter than min_positive_s, then
// fill gaps shorter than min_gap_s. Interval edges sit at frame-boundary
// times (center +- half period), clamped at 0.
Timeline BinarizeProbs(const std::vector<double> &probs,
                       const std::vector<double> &timestamps_s,
                       double threshold, double min_positive_s,
                       double min_gap_s);

struct DiarizeOptions {
  VBxConfig vbx;
  BinarizeConfig binarize;
  bool handle_overlap = true;
};

// Diagnostics for tests and logs.
struct DiarizeInfo {
  int speech_frames = 0;
  int clustering_calls = 0;
  int num_speakers = 0;
};

// VAD binarization -> embedding selection -> AHC + VBx -> interval
// assembly -> second-speaker assignment on the OSD timeline. Returns an
// empty annotation when no speech is detected.
Annotation RunDiarization(const ExtractionArchive &archive,
                          const PLDAModel &plda, const DiarizeOptions &options,
                          DiarizeInfo *info = nullptr);

// For each overlap interval, adds the temporally closest other speaker as
// a second speaker (primary = the speaker covering most of the interval).
// Input must have at most one active speaker per instant; output has at
// most two.
Annotation AssignSecondSpeakers(const Annotation &diar,
                                const Timeline &overlap_timeline,
                                int max_speakers_per_frame = 2);

struct BenchmarkReport {
  long per_segment_windows = 0;
  long per_segment_encoder_passes = 0;
  double per_segment_seconds = 0.0;
  long per_frame_encoder_passes = 0;
  double per_frame_seconds = 0.0;
};

// Sliding-window per-segment extraction versus one per-frame pass, on the
// same encoder (the per-frame twin is converted from the per-segment
// model). Windows are enumerated over the speech timeline; by default the
// whole recording counts as speech.
BenchmarkReport BenchmarkExtraction(const AudioBuffer &audio,
                                    const MelConfig &mel,
                                    const JointModel &per_segment_model,
                                    double segment_s = 1.5,
                                    double shift_s = 0.25,
                                    const Timeline *speech = nullptr);

struct FileScore {
  std::string file_id;
  DERBreakdown der;
};

struct ScoreReport {
  std::vector<FileScore> files;  // sorted by file id
  DERBreakdown corpus;           // duration-weighted aggregate
};

// Scores hypothesis RTTM records against reference records, grouped by
// file id. Reference files without hypothesis lines score against an
// empty hypothesis; hypothesis-only file ids are an error.
ScoreReport ScoreRecords(const std::vector<RttmRecord> &ref,
                         const std::vector<RttmRecord> &hyp);

}  // namespace jdiar

#endif  // JDIAR_PIPELINE_H_
