// src/der-metrics.cc

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

#include "jdiar/der-metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace jdiar {

std::vector<int> MaxWeightAssignment(
    const std::vector<std::vector<double>> &w) {
  const int rows = static_cast<int>(w.size());
  const int cols = rows ? static_cast<int>(w[0].size()) : 0;
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  const int n = std::max(rows, cols);

  // Pad to square and negate: minimum-cost perfect matching on -w is the
  // maximum-weight assignment; padded cells cost 0 (weight 0).
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (w[i][j] < 0.0) {
        throw ContractError("assignment weights must be non-negative");
      }
      cost[i][j] = -w[i][j];
    }
  }

  // Shortest augmenting path with potentials, O(n^3).
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(rows, -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[j];
    if (i >= 1 && i <= rows && j <= cols) row_to_col[i - 1] = j - 1;
  }
  return row_to_col;
}

std::vector<std::pair<std::string, std::string>> OptimalSpeakerMapping(
    const Annotation &ref, const Annotation &hyp) {
  const auto ref_speakers = ref.Speakers();
  const auto hyp_speakers = hyp.Speakers();
  if (ref_speakers.empty() || hyp_speakers.empty()) return {};

  std::vector<Timeline> ref_timelines, hyp_timelines;
  for (const auto &s : ref_speakers) ref_timelines.push_back(ref.SpeakerTimeline(s));
  for (const auto &s : hyp_speakers) hyp_timelines.push_back(hyp.SpeakerTimeline(s));

  std::vector<std::vector<double>> overlap(
      ref_speakers.size(), std::vector<double>(hyp_speakers.size(), 0.0));
  for (size_t i = 0; i < ref_speakers.size(); ++i) {
    for (size_t j = 0; j < hyp_speakers.size(); ++j) {
      overlap[i][j] =
          TimelineDuration(TimelineIntersect(ref_timelines[i], hyp_timelines[j]));
    }
  }
  const auto assignment = MaxWeightAssignment(overlap);
  std::vector<std::pair<std::string, std::string>> mapping;
  for (size_t i = 0; i < ref_speakers.size(); ++i) {
    if (assignment[i] >= 0) {
      mapping.emplace_back(ref_speakers[i], hyp_speakers[assignment[i]]);
    }
  }
  return mapping;
}

DERBreakdown ComputeDer(const Annotation &ref, const Annotation &hyp) {
  const auto mapping = OptimalSpeakerMapping(ref, hyp);

  const auto ref_speakers = ref.Speakers();
  const auto hyp_speakers = hyp.Speakers();
  std::vector<Timeline> ref_timelines, hyp_timelines;
  for (const auto &s : ref_speakers) ref_timelines.push_back(ref.SpeakerTimeline(s));
  for (const auto &s : hyp_speakers) hyp_timelines.push_back(hyp.SpeakerTimeline(s));

  std::map<std::string, std::string> ref_to_hyp(mapping.begin(), mapping.end());

  std::vector<double> cuts;
  for (const auto &s : ref.segments()) {
    cuts.push_back(s.onset_s);
    cuts.push_back(s.offset_s);
  }
  for (const auto &s : hyp.segments()) {
    cuts.push_back(s.onset_s);
    cuts.push_back(s.offset_s);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double miss_s = 0.0, fa_s = 0.0, conf_s = 0.0, ref_speech_s = 0.0;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double d = cuts[c + 1] - cuts[c];
    if (d <= 0.0) continue;
    const double mid = 0.5 * (cuts[c] + cuts[c + 1]);

    std::vector<char> ref_active(ref_speakers.size(), 0);
    std::vector<char> hyp_active(hyp_speakers.size(), 0);
    int n_ref = 0, n_hyp = 0;
    for (size_t i = 0; i < ref_speakers.size(); ++i) {
      if (TimelineContains(ref_timelines[i], mid)) {
        ref_active[i] = 1;
        ++n_ref;
      }
    }
    for (size_t j = 0; j < hyp_speakers.size(); ++j) {
      if (TimelineContains(hyp_timelines[j], mid)) {
        hyp_active[j] = 1;
        ++n_hyp;
      }
    }
    int correct = 0;
    for (size_t i = 0; i < ref_speakers.size(); ++i) {
      if (!ref_active[i]) continue;
      auto it = ref_to_hyp.find(ref_speakers[i]);
      if (it == ref_to_hyp.end()) continue;
      for (size_t j = 0; j < hyp_speakers.size(); ++j) {
        if (hyp_active[j] && hyp_speakers[j] == it->second) {
          ++correct;
          break;
        }
      }
    }
    ref_speech_s += d * n_ref;
    miss_s += d * std::max(0, n_ref - n_hyp);
    fa_s += d * std::max(0, n_hyp - n_ref);
    conf_s += d * (std::min(n_ref, n_hyp) - correct);
  }

  DERBreakdown out;
  out.ref_speech_s = ref_speech_s;
  if (ref_speech_s <= 0.0) {
    if (miss_s == 0.0 && fa_s == 0.0 && conf_s == 0.0) return out;
    throw ContractError("DER undefined: reference contains no speech");
  }
  out.miss_pct = 100.0 * miss_s / ref_speech_s;
  out.fa_pct = 100.0 * fa_s / ref_speech_s;
  out.conf_pct = 100.0 * conf_s / ref_speech_s;
  out.der_pct = 100.0 * (miss_s + fa_s + conf_s) / ref_speech_s;
  return out;
}

DetectionErrors ComputeDetectionErrors(const Timeline &ref,
                                       const Timeline &hyp) {
  const double ref_dur = TimelineDuration(ref);
  if (ref_dur <= 0.0) {
    throw ContractError("detection errors undefined: empty reference timeline");
  }
  DetectionErrors out;
  out.miss_pct = 100.0 * TimelineDuration(TimelineSubtract(ref, hyp)) / ref_dur;
  out.fa_pct = 100.0 * TimelineDuration(TimelineSubtract(hyp, ref)) / ref_dur;
  return out;
}

}  // namespace jdiar
