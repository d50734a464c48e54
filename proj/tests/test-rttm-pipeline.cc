// tests/test-rttm-pipeline.cc

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

#include <cmath>

#include "doctest.h"
#include "jdiar/pipeline.h"
#include "testing-util.h"

using namespace jdiar;
using jdiar_test::TempDir;

namespace {

// Independent re-implementation of the smoothing rules by direct scanning
// over boolean frames.
Timeline OracleBinarize(const std::vector<double> &probs,
                        const std::vector<double> &ts, double threshold,
                        double min_pos, double min_gap) {
  struct Span {
    double on, off;
  };
  std::vector<Span> spans;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < threshold) continue;
    const double on = std::max(0.0, ts[i] - 0.04);
    const double off = ts[i] + 0.04;
    if (!spans.empty() && std::fabs(spans.back().off - on) < 1e-9) {
      spans.back().off = off;
    } else {
      spans.push_back({on, off});
    }
  }
  std::vector<Span> kept;
  for (const auto &s : spans) {
    if (s.off - s.on + 1e-9 >= min_pos) kept.push_back(s);
  }
  Timeline out;
  for (const auto &s : kept) {
    if (!out.empty() && s.on - out.back().offset_s < min_gap) {
      out.back().offset_s = s.off;
    } else {
      out.push_back({s.on, s.off});
    }
  }
  return out;
}

ExtractionArchive MakeArchive(Rng &rng, int frames, int dim) {
  ExtractionArchive arc;
  arc.offset_ms = 12;
  arc.embeddings = jdiar_test::RandomTensor(rng, {frames, dim});
  arc.vad_prob.resize(frames);
  arc.osd_prob.resize(frames);
  for (int i = 0; i < frames; ++i) {
    arc.vad_prob[i] = rng.Uniform(0.01, 0.99);
    arc.osd_prob[i] = rng.Uniform(0.01, 0.99);
  }
  // Mirror the float32 rounding that FromOutput applies.
  for (size_t i = 0; i < arc.embeddings.size(); ++i) {
    arc.embeddings[i] = static_cast<double>(static_cast<float>(arc.embeddings[i]));
  }
  for (int i = 0; i < frames; ++i) {
    arc.vad_prob[i] = static_cast<double>(static_cast<float>(arc.vad_prob[i]));
    arc.osd_prob[i] = static_cast<double>(static_cast<float>(arc.osd_prob[i]));
  }
  return arc;
}

}  // namespace

TEST_SUITE("rttm") {
  TEST_CASE("parses a SPEAKER line") {
    const auto records =
        ParseRttm("SPEAKER rec1 1 0.330 1.250 <NA> <NA> spk00 <NA> <NA>\n");
    REQUIRE(records.size() == 1);
    CHECK(records[0].file_id == "rec1");
    CHECK(records[0].channel == 1);
    CHECK(records[0].onset_s == doctest::Approx(0.330));
    CHECK(records[0].duration_s == doctest::Approx(1.250));
    CHECK(records[0].speaker == "spk00");
  }

  TEST_CASE("errors carry the line number") {
    CHECK_THROWS_WITH_AS(
        ParseRttm("SPEAKER rec1 1 0.330 1.250 <NA> <NA> spk00 <NA> <NA>\n"
                  "SPEAKER rec1 1 2.0 -1.0 <NA> <NA> spk00 <NA> <NA>\n"),
        doctest::Contains("line 2"), FormatError);
    CHECK_THROWS_AS(ParseRttm("SPEAKER rec1 1 0.3\n"), FormatError);
    CHECK_THROWS_AS(ParseRttm("LEXEME rec1 1 0.3 1.0 <NA> <NA> w <NA> <NA>\n"),
                    FormatError);
  }

  TEST_CASE("write/parse round-trip on millisecond-aligned records") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<RttmRecord> records;
      const int n = 1 + static_cast<int>(rng.UniformInt(0, 12));
      for (int i = 0; i < n; ++i) {
        RttmRecord rec;
        rec.file_id = "file" + std::to_string(rng.UniformInt(0, 2));
        rec.onset_s = rng.UniformInt(0, 30000) / 1000.0;
        rec.duration_s = (1 + rng.UniformInt(0, 5000)) / 1000.0;
        rec.speaker = "spk" + std::to_string(rng.UniformInt(0, 4));
        records.push_back(rec);
      }
      CHECK(ParseRttm(WriteRttm(records)) == records);
    }
  }

  TEST_CASE("file writer is atomic-by-rename and readable back") {
    TempDir dir("rttm");
    std::vector<RttmRecord> records;
    RttmRecord rec;
    rec.file_id = "conv0";
    rec.onset_s = 1.25;
    rec.duration_s = 2.5;
    rec.speaker = "a";
    records.push_back(rec);
    WriteRttmFile(dir.File("x.rttm"), records);
    CHECK(ReadRttmFile(dir.File("x.rttm")) == records);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("binarize probabilities: basic shapes") {
    std::vector<double> ts;
    for (int i = 0; i < 50; ++i) ts.push_back(0.012 + 0.08 * i);

    std::vector<double> high(50, 0.9);
    const Timeline all = BinarizeProbs(high, ts, 0.5, 0.2, 0.1);
    REQUIRE(all.size() == 1);
    CHECK(all[0].onset_s == doctest::Approx(0.0));
    CHECK(all[0].offset_s == doctest::Approx(ts.back() + 0.04));

    std::vector<double> lone(50, 0.0);
    lone[25] = 0.99;
    CHECK(BinarizeProbs(lone, ts, 0.5, 0.2, 0.1).empty());
  }

  TEST_CASE("binarize matches the scan-line oracle on random sequences") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 30 + static_cast<int>(rng.UniformInt(0, 80));
      std::vector<double> probs(n), ts(n);
      for (int i = 0; i < n; ++i) {
        probs[i] = rng.Uniform(0.0, 1.0);
        ts[i] = 0.012 + 0.08 * i;
      }
      const double min_pos = rng.Uniform(0.0, 0.4);
      const double min_gap = rng.Uniform(0.0, 0.3);
      const Timeline got = BinarizeProbs(probs, ts, 0.5, min_pos, min_gap);
      const Timeline want = OracleBinarize(probs, ts, 0.5, min_pos, min_gap);
      REQUIRE(got.size() == want.size());
      for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].onset_s == doctest::Approx(want[i].onset_s).epsilon(1e-12));
        CHECK(got[i].offset_s == doctest::Approx(want[i].offset_s).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("second speakers come from the temporally closest speaker") {
    Annotation diar;
    diar.Add(0.0, 10.0, "A");
    diar.Add(10.5, 12.0, "B");
    diar.Add(30.0, 40.0, "C");
    const Annotation out = AssignSecondSpeakers(diar, {{9.0, 10.0}});
    // B is 0.5 s away, C is 20 s away: B wins.
    bool found = false;
    for (const auto &seg : out.segments()) {
      if (seg.speaker == "B" && seg.onset_s == doctest::Approx(9.0) &&
          seg.offset_s == doctest::Approx(10.0)) {
        found = true;
      }
    }
    CHECK(found);
  }

  TEST_CASE("single-speaker input is returned unchanged") {
    Annotation diar;
    diar.Add(0.0, 5.0, "A");
    const Annotation out = AssignSecondSpeakers(diar, {{1.0, 2.0}});
    CHECK(out.segments() == diar.segments());
  }

  TEST_CASE("equidistant candidates break ties deterministically") {
    Annotation diar;
    diar.Add(0.0, 10.0, "A");
    diar.Add(12.0, 13.0, "C");
    diar.Add(12.0, 13.0, "B");
    // Wait: B and C overlap - violates the single-speaker precondition.
    CHECK_THROWS_AS(AssignSecondSpeakers(diar, {{9.0, 10.0}}), ContractError);

    // B's gap to [9,10] is 1.0 (11 - 10); C's is also 1.0 (9 - 8). The tie
    // breaks toward the earlier nearest-interval onset, so C wins.
    Annotation sym;
    sym.Add(8.0, 10.0, "A");
    sym.Add(7.0, 8.0, "C");
    sym.Add(11.0, 12.0, "B");
    const Annotation out = AssignSecondSpeakers(sym, {{9.0, 10.0}});
    bool c_added = false;
    for (const auto &seg : out.segments()) {
      if (seg.speaker == "C" && seg.onset_s == doctest::Approx(9.0) &&
          seg.offset_s == doctest::Approx(10.0)) {
        c_added = true;
      }
    }
    CHECK(c_added);
  }

  TEST_CASE("never more than two concurrent speakers after assignment") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      // Single-speaker-per-instant diarization: consecutive blocks.
      std::vector<SpeakerSegment> segs;
      double t = 0.0;
      while (t < 20.0) {
        const double dur = rng.Uniform(0.5, 3.0);
        segs.push_back({t, t + dur,
                        "s" + std::to_string(rng.UniformInt(0, 3))});
        t += dur + rng.Uniform(0.0, 0.5);
      }
      Timeline overlap;
      double o = rng.Uniform(0.0, 3.0);
      while (o < 18.0) {
        const double dur = rng.Uniform(0.2, 1.0);
        overlap.push_back({o, o + dur});
        o += dur + rng.Uniform(0.5, 2.0);
      }
      const Annotation out = AssignSecondSpeakers(Annotation(segs), overlap);
      for (double probe = 0.05; probe < 21.0; probe += 0.1) {
        CHECK(out.CountActiveAt(probe) <= 2);
      }
    }
  }

  TEST_CASE("archive round-trip is bit-exact") {
    TempDir dir("pfem");
    Rng rng(13);
    const ExtractionArchive arc = MakeArchive(rng, 37, 8);
    arc.Save(dir.File("a.pfem"));
    const ExtractionArchive back = ExtractionArchive::Load(dir.File("a.pfem"));
    CHECK(back.version == arc.version);
    CHECK(back.period_ms == arc.period_ms);
    CHECK(back.offset_ms == arc.offset_ms);
    CHECK(back.embeddings.values() == arc.embeddings.values());
    CHECK(back.vad_prob == arc.vad_prob);
    CHECK(back.osd_prob == arc.osd_prob);
  }

  TEST_CASE("diarization of a silent archive is empty and valid") {
    Rng rng(17);
    ExtractionArchive arc = MakeArchive(rng, 40, 8);
    for (double &p : arc.vad_prob) p = 0.01;
    PLDAModel plda;
    plda.mean.assign(8, 0.0);
    plda.across_class = Tensor({8, 8});
    plda.within_class = Tensor({8, 8});
    for (int i = 0; i < 8; ++i) {
      plda.across_class.at(i, i) = 1.0;
      plda.within_class.at(i, i) = 1.0;
    }
    DiarizeOptions options;
    options.vbx.latent_dim = 8;
    DiarizeInfo info;
    const Annotation out = RunDiarization(arc, plda, options, &info);
    CHECK(out.Empty());
    CHECK(info.speech_frames == 0);
    CHECK(info.clustering_calls == 0);

    // Dimension mismatch is rejected.
    ExtractionArchive bad = MakeArchive(rng, 10, 5);
    CHECK_THROWS_AS(RunDiarization(bad, plda, options), DimensionError);
  }

  TEST_CASE("clustering is invoked once per recording") {
    Rng rng(19);
    ExtractionArchive arc = MakeArchive(rng, 60, 8);
    for (double &p : arc.vad_prob) p = 0.95;
    PLDAModel plda;
    plda.mean.assign(8, 0.0);
    plda.across_class = Tensor({8, 8});
    plda.within_class = Tensor({8, 8});
    for (int i = 0; i < 8; ++i) {
      plda.across_class.at(i, i) = 0.5;
      plda.within_class.at(i, i) = 1.0;
    }
    DiarizeOptions options;
    options.vbx.latent_dim = 8;
    options.vbx.max_iters = 5;
    DiarizeInfo info;
    const Annotation out = RunDiarization(arc, plda, options, &info);
    CHECK(info.clustering_calls == 1);
    CHECK(info.speech_frames == 60);
    CHECK(!out.Empty());
    for (double probe = 0.05; probe < 5.0; probe += 0.05) {
      CHECK(out.CountActiveAt(probe) <= 2);
    }
  }
}
