// src/pipeline.cc

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

#include "jdiar/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "jdiar/mel-features.h"

namespace jdiar {

void BinarizeConfig::Validate() const {
  if (!(vad_threshold > 0.0 && vad_threshold < 1.0) ||
      !(osd_threshold > 0.0 && osd_threshold < 1.0)) {
    throw ConfigError("binarize: thresholds must be in (0, 1)");
  }
  if (min_speech_s < 0.0 || min_silence_s < 0.0 || min_overlap_s < 0.0) {
    throw ConfigError("binarize: minimum durations must be >= 0");
  }
}

Timeline BinarizeProbs(const std::vector<double> &probs,
                       const std::vector<double> &timestamps_s,
                       double threshold, double min_positive_s,
                       double min_gap_s) {
  if (probs.size() != timestamps_s.size()) {
    throw ContractError("binarize: probs/timestamps length mismatch");
  }
  const double half = 0.040;  // half of the 80 ms frame period
  Timeline raw;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < threshold) continue;
    const double onset = std::max(0.0, timestamps_s[i] - half);
    const double offset = timestamps_s[i] + half;
    if (!raw.empty() && onset <= raw.back().offset_s + 1e-9) {
      raw.back().offset_s = offset;
    } else {
      raw.push_back({onset, offset});
    }
  }
  // Duration pruning first, then gap filling.
  Timeline pruned;
  for (const Interval &iv : raw) {
    if (iv.Duration() + 1e-9 >= min_positive_s) pruned.push_back(iv);
  }
  Timeline filled;
  for (const Interval &iv : pruned) {
    if (!filled.empty() && iv.onset_s - filled.back().offset_s < min_gap_s) {
      filled.back().offset_s = iv.offset_s;
    } else {
      filled.push_back(iv);
    }
  }
  return filled;
}

namespace {

std::string ClusterName(int label) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%02d", label);
  return buf;
}

}  // namespace

Annotation RunDiarization(const ExtractionArchive &archive,
                          const PLDAModel &plda, const DiarizeOptions &options,
                          DiarizeInfo *info) {
  options.binarize.Validate();
  options.vbx.Validate();
  if (archive.Dim() != plda.Dim()) {
    throw DimensionError("diarize: archive dimension " +
                         std::to_string(archive.Dim()) +
                         " does not match PLDA dimension " +
                         std::to_string(plda.Dim()));
  }
  const std::vector<double> timestamps = archive.Timestamps();
  const Timeline speech =
      BinarizeProbs(archive.vad_prob, timestamps, options.binarize.vad_threshold,
                    options.binarize.min_speech_s, options.binarize.min_silence_s);

  std::vector<int> speech_frames;
  for (int i = 0; i < archive.NumFrames(); ++i) {
    if (TimelineContains(speech, timestamps[i])) speech_frames.push_back(i);
  }
  if (info != nullptr) {
    info->speech_frames = static_cast<int>(speech_frames.size());
    info->clustering_calls = 0;
    info->num_speakers = 0;
  }
  if (speech_frames.empty()) return Annotation();

  // Length-normalized embeddings at speech frames, one matrix for the
  // whole recording.
  const int d = archive.Dim();
  Tensor emb({static_cast<int>(speech_frames.size()), d});
  for (size_t k = 0; k < speech_frames.size(); ++k) {
    const double *src =
        archive.embeddings.data() + static_cast<size_t>(speech_frames[k]) * d;
    double norm = 0.0;
    for (int j = 0; j < d; ++j) norm += src[j] * src[j];
    norm = std::sqrt(norm);
    double *dst = emb.data() + k * d;
    if (norm > 1e-30) {
      for (int j = 0; j < d; ++j) dst[j] = src[j] / norm;
    } else {
      for (int j = 0; j < d; ++j) dst[j] = src[j];
    }
  }

  const int rank = std::min(options.vbx.latent_dim, plda.Dim());
  const LatentSpace space = PrepareLatentSpace(plda, rank);
  const Tensor projected = space.ProjectRows(emb);
  const std::vector<int> init_labels = AhcLabelsFromSimilarity(
      PairwiseLlrMatrix(space, projected), options.vbx.ahc_threshold);
  const ClusteringResult refined =
      VbxRefine(projected, init_labels, space.psi, options.vbx);
  if (info != nullptr) {
    info->clustering_calls = 1;
    info->num_speakers = refined.NumSpeakers();
  }

  // Intervals: inside each speech interval, member frames own the span up
  // to the midpoint toward the next member; label changes cut there.
  std::vector<SpeakerSegment> segments;
  size_t cursor = 0;
  for (const Interval &iv : speech) {
    std::vector<size_t> members;
    while (cursor < speech_frames.size() &&
           timestamps[speech_frames[cursor]] < iv.offset_s) {
      if (timestamps[speech_frames[cursor]] >= iv.onset_s) {
        members.push_back(cursor);
      }
      ++cursor;
    }
    if (members.empty()) continue;
    double seg_start = iv.onset_s;
    for (size_t m = 0; m < members.size(); ++m) {
      const int label = refined.hard_labels[members[m]];
      const bool last = m + 1 == members.size();
      const int next_label =
          last ? -1 : refined.hard_labels[members[m + 1]];
      if (last || next_label != label) {
        const double seg_end =
            last ? iv.offset_s
                 : 0.5 * (timestamps[speech_frames[members[m]]] +
                          timestamps[speech_frames[members[m + 1]]]);
        segments.push_back({seg_start, seg_end, ClusterName(label)});
        seg_start = seg_end;
      }
    }
  }
  Annotation result(std::move(segments));

  if (options.handle_overlap) {
    Timeline overlap = BinarizeProbs(
        archive.osd_prob, timestamps, options.binarize.osd_threshold,
        options.binarize.min_overlap_s, options.binarize.min_silence_s);
    overlap = TimelineIntersect(overlap, speech);
    result = AssignSecondSpeakers(result, overlap);
  }
  return result;
}

Annotation AssignSecondSpeakers(const Annotation &diar,
                                const Timeline &overlap_timeline,
                                int max_speakers_per_frame) {
  if (max_speakers_per_frame != 2) {
    throw ConfigError("assign_second_speakers: only 2 concurrent speakers supported");
  }
  // Precondition: single speaker per instant.
  const auto &segs = diar.segments();
  for (size_t i = 0; i + 1 < segs.size(); ++i) {
    if (segs[i + 1].onset_s < segs[i].offset_s &&
        segs[i + 1].speaker != segs[i].speaker) {
      throw ContractError(
          "assign_second_speakers: input already has concurrent speakers");
    }
  }
  const std::vector<std::string> speakers = diar.Speakers();
  if (speakers.size() < 2 || overlap_timeline.empty()) return diar;

  std::vector<Timeline> timelines;
  for (const auto &s : speakers) timelines.push_back(diar.SpeakerTimeline(s));

  std::vector<SpeakerSegment> out_segments = diar.segments();
  for (const Interval &o : overlap_timeline) {
    // Primary: largest coverage of the overlap region, lexicographic on ties.
    int primary = -1;
    double best_cov = 0.0;
    for (size_t s = 0; s < speakers.size(); ++s) {
      const double cov =
          TimelineDuration(TimelineIntersect(timelines[s], {o}));
      if (cov > best_cov + 1e-12) {
        best_cov = cov;
        primary = static_cast<int>(s);
      }
    }
    if (primary < 0) continue;  // overlap outside any attributed speech

    // Second: the temporally closest other speaker; 0 when touching.
    int second = -1;
    double best_dist = 0.0;
    double best_onset = 0.0;
    for (size_t s = 0; s < speakers.size(); ++s) {
      if (static_cast<int>(s) == primary || timelines[s].empty()) continue;
      double dist = std::numeric_limits<double>::infinity();
      double nearest_onset = 0.0;
      for (const Interval &iv : timelines[s]) {
        const double gap =
            std::max(0.0, std::max(iv.onset_s - o.offset_s, o.onset_s - iv.offset_s));
        if (gap < dist - 1e-12 ||
            (std::fabs(gap - dist) <= 1e-12 && iv.onset_s < nearest_onset)) {
          dist = gap;
          nearest_onset = iv.onset_s;
        }
      }
      const bool better =
          second < 0 || dist < best_dist - 1e-12 ||
          (std::fabs(dist - best_dist) <= 1e-12 &&
           (nearest_onset < best_onset - 1e-12 ||
            (std::fabs(nearest_onset - best_onset) <= 1e-12 &&
             speakers[s] < speakers[second])));
      if (better) {
        second = static_cast<int>(s);
        best_dist = dist;
        best_onset = nearest_onset;
      }
    }
    if (second < 0) continue;  // no other speaker exists
    out_segments.push_back({o.onset_s, o.offset_s, speakers[second]});
  }
  return Annotation(std::move(out_segments));
}

BenchmarkReport BenchmarkExtraction(const AudioBuffer &audio,
                                    const MelConfig &mel,
                                    const JointModel &per_segment_model,
                                    double segment_s, double shift_s,
                                    const Timeline *speech) {
  if (per_segment_model.mode() != ModelMode::kPerSegment) {
    throw ContractError("benchmark: needs a per-segment model");
  }
  const FeatureMatrix feats = ComputeLogMel(audio, mel);
  Timeline spans;
  if (speech != nullptr) {
    spans = *speech;
  } else {
    spans.push_back({0.0, audio.DurationSeconds()});
  }

  BenchmarkReport report;
  using Clock = std::chrono::steady_clock;

  {
    ForwardStats stats;
    const auto start = Clock::now();
    for (const Interval &iv : spans) {
      if (iv.Duration() < segment_s) continue;
      const long windows =
          static_cast<long>(std::floor((iv.Duration() - segment_s) / shift_s)) + 1;
      for (long w = 0; w < windows; ++w) {
        const double t0 = iv.onset_s + w * shift_s;
        per_segment_model.ForwardPerSegment(feats, t0, t0 + segment_s, &stats);
        ++report.per_segment_windows;
      }
    }
    report.per_segment_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    report.per_segment_encoder_passes = stats.encoder_passes;
  }

  {
    const JointModel per_frame = per_segment_model.ConvertToPerFrame(1);
    ForwardStats stats;
    const auto start = Clock::now();
    per_frame.ForwardPerFrame(feats, &stats);
    report.per_frame_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    report.per_frame_encoder_passes = stats.encoder_passes;
  }
  return report;
}

ScoreReport ScoreRecords(const std::vector<RttmRecord> &ref,
                         const std::vector<RttmRecord> &hyp) {
  std::map<std::string, std::vector<RttmRecord>> ref_by_file, hyp_by_file;
  for (const auto &r : ref) ref_by_file[r.file_id].push_back(r);
  for (const auto &h : hyp) {
    if (!ref_by_file.count(h.file_id)) {
      throw ContractError("hypothesis file id '" + h.file_id +
                          "' has no reference");
    }
    hyp_by_file[h.file_id].push_back(h);
  }

  ScoreReport report;
  double err_s = 0.0, ref_s = 0.0;
  for (const auto &[file_id, recs] : ref_by_file) {
    const Annotation ref_ann = AnnotationFromRecords(recs);
    Annotation hyp_ann;
    auto it = hyp_by_file.find(file_id);
    if (it != hyp_by_file.end()) hyp_ann = AnnotationFromRecords(it->second);
    FileScore fs;
    fs.file_id = file_id;
    fs.der = ComputeDer(ref_ann, hyp_ann);
    err_s += fs.der.der_pct / 100.0 * fs.der.ref_speech_s;
    report.files.push_back(fs);
    ref_s += fs.der.ref_speech_s;
  }
  report.corpus.ref_speech_s = ref_s;
  if (ref_s > 0.0) {
    double miss_s = 0.0, fa_s = 0.0, conf_s = 0.0;
    for (const auto &fs : report.files) {
      miss_s += fs.der.miss_pct / 100.0 * fs.der.ref_speech_s;
      fa_s += fs.der.fa_pct / 100.0 * fs.der.ref_speech_s;
      conf_s += fs.der.conf_pct / 100.0 * fs.der.ref_speech_s;
    }
    report.corpus.miss_pct = 100.0 * miss_s / ref_s;
    report.corpus.fa_pct = 100.0 * fa_s / ref_s;
    report.corpus.conf_pct = 100.0 * conf_s / ref_s;
    report.corpus.der_pct = 100.0 * err_s / ref_s;
  }
  return report;
}

}  // namespace jdiar
