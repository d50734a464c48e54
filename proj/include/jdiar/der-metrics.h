// include/jdiar/der-metrics.h

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

#ifndef JDIAR_DER_METRICS_H_
#define JDIAR_DER_METRICS_H_

#include <string>
#include <utility>
#include <vector>

#include "jdiar/annotation.h"

namespace jdiar {

// Collar-free DER decomposition; percentages of total reference speech
// time (speaker-seconds).
struct DERBreakdown {
  double miss_pct = 0.0;
  double fa_pct = 0.0;
  double conf_pct = 0.0;
  double der_pct = 0.0;
  double ref_speech_s = 0.0;
};

// VAD/OSD miss and false alarm, both normalized by total reference
// positive time.
struct DetectionErrors {
  double miss_pct = 0.0;
  double fa_pct = 0.0;
};

// Maximum-weight one-to-one assignment on an r x c matrix of non-negative
// weights. Returns row -> column (-1 for unassigned rows). Deterministic
// for equal-weight alternatives.
std::vector<int> MaxWeightAssignment(const std::vector<std::vector<double>> &w);

// One-to-one speaker mapping maximizing total co-occurrence time,
// returned as (ref_speaker, hyp_speaker) pairs ordered by ref label.
std::vector<std::pair<std::string, std::string>> OptimalSpeakerMapping(
    const Annotation &ref, const Annotation &hyp);

// Cuts the timeline at every interval boundary; per slice of duration d:
//   miss += d * max(0, Nref - Nhyp)
//   fa   += d * max(0, Nhyp - Nref)
//   conf += d * (min(Nref, Nhyp) - C)
// with C the number of optimally mapped speaker pairs active on both
// sides. No collar, no scoring exclusions.
DERBreakdown ComputeDer(const Annotation &ref, const Annotation &hyp);

// miss = |ref \ hyp| / |ref|, fa = |hyp \ ref| / |ref|, as percentages.
// Raises ContractError when the reference timeline is empty.
DetectionErrors ComputeDetectionErrors(const Timeline &ref, const Timeline &hyp);

}  // namespace jdiar

#endif  // JDIAR_DER_METRICS_H_
