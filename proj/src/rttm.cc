// src/rttm.cc

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

#include "jdiar/rttm.h"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace jdiar {

namespace {

std::vector<std::string> SplitWhitespace(const std::string &line) {
  std::vector<std::string> fields;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) fields.push_back(tok);
  return fields;
}

double ParseNumber(const std::string &tok, int line_no, const char *what) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception &) {
    throw FormatError("rttm line " + std::to_string(line_no) + ": bad " +
                      what + " field '" + tok + "'");
  }
}

}  // namespace

std::vector<RttmRecord> ParseRttm(const std::string &text) {
  std::vector<RttmRecord> records;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = SplitWhitespace(line);
    if (fields.size() < 9) {
      throw FormatError("rttm line " + std::to_string(line_no) +
                        ": expected >= 9 fields, got " +
                        std::to_string(fields.size()));
    }
    if (fields[0] != "SPEAKER") {
      throw FormatError("rttm line " + std::to_string(line_no) +
                        ": unsupported type '" + fields[0] + "'");
    }
    RttmRecord rec;
    rec.file_id = fields[1];
    rec.channel = static_cast<int>(ParseNumber(fields[2], line_no, "channel"));
    rec.onset_s = ParseNumber(fields[3], line_no, "onset");
    rec.duration_s = ParseNumber(fields[4], line_no, "duration");
    rec.speaker = fields[7];
    if (!(rec.duration_s > 0.0)) {
      throw FormatError("rttm line " + std::to_string(line_no) +
                        ": non-positive duration '" + fields[4] + "'");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string WriteRttm(const std::vector<RttmRecord> &records) {
  std::string out;
  char buf[64];
  for (const auto &rec : records) {
    out += "SPEAKER " + rec.file_id + " " + std::to_string(rec.channel);
    std::snprintf(buf, sizeof(buf), " %.3f %.3f", rec.onset_s, rec.duration_s);
    out += buf;
    out += " <NA> <NA> " + rec.speaker + " <NA> <NA>\n";
  }
  return out;
}

std::vector<RttmRecord> ReadRttmFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rttm file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseRttm(ss.str());
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

void WriteRttmFile(const std::string &path,
                   const std::vector<RttmRecord> &records) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write rttm file: " + tmp);
    out << WriteRttm(records);
    if (!out) throw IoError("short write to rttm file: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename " + tmp + " to " + path);
  }
}

Annotation AnnotationFromRecords(const std::vector<RttmRecord> &records) {
  std::vector<SpeakerSegment> segments;
  for (const auto &rec : records) {
    if (!records.empty() && rec.file_id != records.front().file_id) {
      throw ContractError("records span multiple file ids: " +
                          records.front().file_id + " vs " + rec.file_id);
    }
    segments.push_back({rec.onset_s, rec.onset_s + rec.duration_s, rec.speaker});
  }
  return Annotation(std::move(segments));
}

std::vector<RttmRecord> RecordsFromAnnotation(const Annotation &annotation,
                                              const std::string &file_id) {
  std::vector<RttmRecord> records;
  for (const auto &seg : annotation.segments()) {
    RttmRecord rec;
    rec.file_id = file_id;
    rec.channel = 1;
    rec.onset_s = seg.onset_s;
    rec.duration_s = seg.offset_s - seg.onset_s;
    rec.speaker = seg.speaker;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace jdiar
