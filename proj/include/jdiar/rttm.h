// include/jdiar/rttm.h

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

#ifndef JDIAR_RTTM_H_
#define JDIAR_RTTM_H_

#include <string>
#include <vector>

#include "jdiar/annotation.h"

namespace jdiar {

struct RttmRecord {
  std::string file_id;
  int channel = 1;
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::string speaker;

  bool operator==(const RttmRecord &o) const {
    return file_id == o.file_id && channel == o.channel &&
           onset_s == o.onset_s && duration_s == o.duration_s &&
           speaker == o.speaker;
  }
};

// SPEAKER lines with >= 9 whitespace-separated fields. Errors carry the
// line number and the offending field. Times are written at millisecond
// precision, so parse(write(x)) == x for millisecond-quantized records.
std::vector<RttmRecord> ParseRttm(const std::string &text);
std::string WriteRttm(const std::vector<RttmRecord> &records);

std::vector<RttmRecord> ReadRttmFile(const std::string &path);
// Write-temp-then-rename so concurrent readers never see partial output.
void WriteRttmFile(const std::string &path,
                   const std::vector<RttmRecord> &records);

// All records must share one file_id (or the list may be empty).
Annotation AnnotationFromRecords(const std::vector<RttmRecord> &records);
std::vector<RttmRecord> RecordsFromAnnotation(const Annotation &annotation,
                                              const std::string &file_id);

}  // namespace jdiar

#endif  // JDIAR_RTTM_H_
