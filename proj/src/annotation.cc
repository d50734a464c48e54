// src/annotation.cc

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

#include "jdiar/annotation.h"

#include <algorithm>
#include <map>

namespace jdiar {

Timeline NormalizeTimeline(Timeline spans) {
  std::sort(spans.begin(), spans.end(), [](const Interval &a, const Interval &b) {
    return a.onset_s < b.onset_s;
  });
  Timeline out;
  for (const Interval &iv : spans) {
    if (!(iv.onset_s < iv.offset_s)) {
      throw ContractError("interval must have positive duration");
    }
    if (!out.empty() && iv.onset_s <= out.back().offset_s) {
      out.back().offset_s = std::max(out.back().offset_s, iv.offset_s);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

Timeline TimelineUnion(const Timeline &a, const Timeline &b) {
  Timeline merged = a;
  merged.insert(merged.end(), b.begin(), b.end());
  return NormalizeTimeline(std::move(merged));
}

Timeline TimelineIntersect(const Timeline &a, const Timeline &b) {
  Timeline out;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].onset_s, b[j].onset_s);
    const double hi = std::min(a[i].offset_s, b[j].offset_s);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].offset_s < b[j].offset_s) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

Timeline TimelineSubtract(const Timeline &a, const Timeline &b) {
  Timeline out;
  size_t j = 0;
  for (const Interval &iv : a) {
    double cur = iv.onset_s;
    while (j < b.size() && b[j].offset_s <= cur) ++j;
    size_t k = j;
    while (k < b.size() && b[k].onset_s < iv.offset_s) {
      if (b[k].onset_s > cur) out.push_back({cur, b[k].onset_s});
      cur = std::max(cur, b[k].offset_s);
      if (cur >= iv.offset_s) break;
      ++k;
    }
    if (cur < iv.offset_s) out.push_back({cur, iv.offset_s});
  }
  return out;
}

double TimelineDuration(const Timeline &a) {
  double d = 0.0;
  for (const Interval &iv : a) d += iv.Duration();
  return d;
}

bool TimelineContains(const Timeline &a, double t) {
  auto it = std::upper_bound(
      a.begin(), a.end(), t,
      [](double v, const Interval &iv) { return v < iv.onset_s; });
  if (it == a.begin()) return false;
  --it;
  return t >= it->onset_s && t < it->offset_s;
}

Annotation::Annotation(std::vector<SpeakerSegment> segments)
    : segments_(std::move(segments)) {
  Normalize();
}

void Annotation::Add(double onset_s, double offset_s,
                     const std::string &speaker) {
  segments_.push_back({onset_s, offset_s, speaker});
  Normalize();
}

void Annotation::Normalize() {
  for (const auto &s : segments_) {
    if (!(s.onset_s < s.offset_s)) {
      throw ContractError("annotation segment must have onset < offset");
    }
  }
  std::map<std::string, Timeline> per_speaker;
  for (const auto &s : segments_) {
    per_speaker[s.speaker].push_back({s.onset_s, s.offset_s});
  }
  segments_.clear();
  for (auto &[speaker, spans] : per_speaker) {
    for (const Interval &iv : NormalizeTimeline(std::move(spans))) {
      segments_.push_back({iv.onset_s, iv.offset_s, speaker});
    }
  }
  std::sort(segments_.begin(), segments_.end(),
            [](const SpeakerSegment &a, const SpeakerSegment &b) {
              if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
              return a.speaker < b.speaker;
            });
}

std::vector<std::string> Annotation::Speakers() const {
  std::vector<std::string> out;
  for (const auto &s : segments_) out.push_back(s.speaker);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Timeline Annotation::SpeakerTimeline(const std::string &speaker) const {
  Timeline spans;
  for (const auto &s : segments_) {
    if (s.speaker == speaker) spans.push_back({s.onset_s, s.offset_s});
  }
  return NormalizeTimeline(std::move(spans));
}

Timeline Annotation::SpeechTimeline() const {
  Timeline spans;
  for (const auto &s : segments_) spans.push_back({s.onset_s, s.offset_s});
  return spans.empty() ? Timeline() : NormalizeTimeline(std::move(spans));
}

double Annotation::TotalSpeakerSeconds() const {
  double total = 0.0;
  for (const auto &s : segments_) total += s.offset_s - s.onset_s;
  return total;
}

int Annotation::CountActiveAt(double t) const {
  int n = 0;
  for (const auto &s : segments_) {
    if (t >= s.onset_s && t < s.offset_s) ++n;
  }
  return n;
}

}  // namespace jdiar
