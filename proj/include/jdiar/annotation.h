// include/jdiar/annotation.h

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

#ifndef JDIAR_ANNOTATION_H_
#define JDIAR_ANNOTATION_H_

#include <string>
#include <vector>

#include "jdiar/common.h"

namespace jdiar {

// Half-open interval [onset, offset) in seconds.
struct Interval {
  double onset_s = 0.0;
  double offset_s = 0.0;

  double Duration() const { return offset_s - onset_s; }
};

// Sorted, pairwise-disjoint intervals.
using Timeline = std::vector<Interval>;

Timeline NormalizeTimeline(Timeline spans);
Timeline TimelineUnion(const Timeline &a, const Timeline &b);
Timeline TimelineIntersect(const Timeline &a, const Timeline &b);
Timeline TimelineSubtract(const Timeline &a, const Timeline &b);
double TimelineDuration(const Timeline &a);
bool TimelineContains(const Timeline &a, double t);

struct SpeakerSegment {
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string speaker;

  bool operator==(const SpeakerSegment &o) const {
    return onset_s == o.onset_s && offset_s == o.offset_s && speaker == o.speaker;
  }
};

// "Who spoke when" for one recording; concurrent speakers allowed.
// Touching or overlapping intervals of the same speaker are merged.
class Annotation {
 public:
  Annotation() = default;
  explicit Annotation(std::vector<SpeakerSegment> segments);

  void Add(double onset_s, double offset_s, const std::string &speaker);

  const std::vector<SpeakerSegment> &segments() const { return segments_; }
  bool Empty() const { return segments_.empty(); }

  std::vector<std::string> Speakers() const;  // sorted, unique
  Timeline SpeakerTimeline(const std::string &speaker) const;
  Timeline SpeechTimeline() const;  // union over all speakers

  // Sum of per-speaker durations (speaker-seconds).
  double TotalSpeakerSeconds() const;

  int CountActiveAt(double t) const;

 private:
  void Normalize();
  std::vector<SpeakerSegment> segments_;
};

}  // namespace jdiar

#endif  // JDIAR_ANNOTATION_H_
