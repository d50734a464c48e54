// tests/test-trainer.cc

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
#include <fstream>

#include "doctest.h"
#include "jdiar/rttm.h"
#include "jdiar/synthetic.h"
#include "jdiar/trainer.h"
#include "jdiar/wav-io.h"
#include "testing-util.h"

using namespace jdiar;
using jdiar_test::TempDir;

namespace {

MelConfig SmallMel() {
  MelConfig mel;
  mel.num_mels = 24;
  return mel;
}

EncoderConfig SmallEncoder() {
  EncoderConfig cfg;
  cfg.input_dim = 24;
  cfg.context_frames = 3;
  cfg.hidden_dims = {16, 24};
  cfg.embed_dim = 12;
  return cfg;
}

TrainConfig SmallTrain() {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.speaker_batch = 4;
  cfg.diarized_batch = 1;
  cfg.crop_seconds = 2.0;
  cfg.mel = SmallMel();
  cfg.aam_scale = 8.0;
  cfg.aam_margin = 0.05;
  cfg.seed = 99;
  return cfg;
}

// Shared on-disk fixture: speaker utterances plus a few annotated
// conversations, built once for the whole test binary.
struct Fixture {
  TempDir dir{"trainer"};
  SpeakerCorpus train_speakers;
  SpeakerCorpus heldout_speakers;
  DiarizedCorpus diarized;

  Fixture() {
    Rng rng(2024);
    const int num_speakers = 6;
    std::vector<SyntheticSpeaker> speakers;
    std::ofstream train_manifest(dir.File("train.tsv"));
    std::ofstream heldout_manifest(dir.File("heldout.tsv"));
    for (int s = 0; s < num_speakers; ++s) {
      speakers.push_back(SampleSpeaker(500 + s));
      const std::string name = "spk" + std::to_string(s);
      for (int u = 0; u < 7; ++u) {
        const AudioBuffer utt =
            RenderUtterance(speakers.back(), 2.0, rng.NextU64());
        const std::string wav =
            dir.File("s" + std::to_string(s) + "_u" + std::to_string(u) + ".wav");
        WriteWav(wav, utt);
        (u < 5 ? train_manifest : heldout_manifest) << wav << "\t" << name << "\n";
      }
    }
    train_manifest.close();
    heldout_manifest.close();

    std::ofstream diar_manifest(dir.File("diar.tsv"));
    for (int c = 0; c < 3; ++c) {
      ConversationConfig conv_cfg;
      conv_cfg.total_duration_s = 24.0;
      conv_cfg.num_speakers = 3;
      conv_cfg.seed = 900 + c;
      std::vector<SyntheticSpeaker> pool = {speakers[c], speakers[c + 1],
                                            speakers[c + 2]};
      const Conversation conv = GenerateConversation(
          pool, {"a", "b", "c"}, conv_cfg);
      const std::string stem = dir.File("conv" + std::to_string(c));
      WriteWav(stem + ".wav", conv.audio);
      WriteRttmFile(stem + ".rttm",
                    RecordsFromAnnotation(Annotation(conv.segments),
                                          "conv" + std::to_string(c)));
      diar_manifest << stem << ".wav\t" << stem << ".rttm\n";
    }
    diar_manifest.close();

    train_speakers = LoadSpeakerManifest(dir.File("train.tsv"));
    heldout_speakers = LoadSpeakerManifest(dir.File("heldout.tsv"));
    diarized = LoadDiarizedManifest(dir.File("diar.tsv"));
  }
};

Fixture &SharedFixture() {
  static Fixture fixture;
  return fixture;
}

std::vector<double> FlattenParams(const JointModel &model) {
  std::vector<double> out;
  for (const auto &e : model.params().entries()) {
    out.insert(out.end(), e.value.values().begin(), e.value.values().end());
  }
  return out;
}

std::vector<double> HeadParams(const JointModel &model) {
  std::vector<double> out;
  for (const char *name : {"vad.w", "vad.b", "osd.w", "osd.b"}) {
    const Tensor &t = model.params().Value(name);
    out.insert(out.end(), t.values().begin(), t.values().end());
  }
  return out;
}

}  // namespace

TEST_SUITE("frame_labels") {
  TEST_CASE("activity is sampled at frame centers") {
    const std::vector<SpeakerSegment> segments = {{0.0, 2.0, "A"},
                                                  {1.0, 3.0, "B"}};
    // One frame whose center falls at each probe time.
    auto probe = [&](double center_s) {
      return DeriveFrameLabels(segments, 1, 80.0, center_s * 1000.0);
    };
    CHECK(probe(1.48).vad[0] == 1);
    CHECK(probe(1.48).osd[0] == 1);
    CHECK(probe(0.52).vad[0] == 1);
    CHECK(probe(0.52).osd[0] == 0);
    CHECK(probe(3.50).vad[0] == 0);
    CHECK(probe(3.50).osd[0] == 0);
  }

  TEST_CASE("matches a 10 ms rasterization oracle; osd implies vad") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<SpeakerSegment> segments;
      const int n = static_cast<int>(rng.UniformInt(0, 6));
      for (int i = 0; i < n; ++i) {
        const double onset = rng.Uniform(0.0, 8.0);
        segments.push_back({onset, onset + rng.Uniform(0.1, 4.0),
                            "s" + std::to_string(rng.UniformInt(0, 3))});
      }
      const int frames = 1 + static_cast<int>(rng.UniformInt(0, 120));
      const double origin = rng.Uniform(0.0, 80.0);
      const FrameLabels got = DeriveFrameLabels(segments, frames, 80.0, origin);

      // Oracle: rasterize activity on a 10 ms grid, then read the value
      // at each frame center's grid cell.
      std::vector<int> raster(2000, 0);
      for (const auto &seg : segments) {
        for (int g = 0; g < 2000; ++g) {
          const double t = g * 0.01 + 0.005;
          if (t >= seg.onset_s && t < seg.offset_s) ++raster[g];
        }
      }
      for (int i = 0; i < frames; ++i) {
        const double center = (origin + i * 80.0) / 1000.0;
        // Count active segments at the exact center (the raster cell
        // holds counts, but boundaries inside a cell need the exact test).
        int active = 0;
        for (const auto &seg : segments) {
          if (center >= seg.onset_s && center < seg.offset_s) ++active;
        }
        CHECK(got.vad[i] == (active >= 1 ? 1 : 0));
        CHECK(got.osd[i] == (active >= 2 ? 1 : 0));
        if (got.osd[i]) CHECK(got.vad[i] == 1);
      }
    }
  }
}

TEST_SUITE("trainer") {
  TEST_CASE("manifest loading assigns sorted class ids") {
    const Fixture &fx = SharedFixture();
    CHECK(fx.train_speakers.NumSpeakers() == 6);
    CHECK(fx.train_speakers.utterances.size() == 30);
    CHECK(fx.train_speakers.speaker_names[0] == "spk0");
    CHECK(fx.diarized.recordings.size() == 3);
    CHECK(!fx.diarized.recordings[0].segments.empty());
  }

  TEST_CASE("zero learning rate leaves parameters bit-identical") {
    const Fixture &fx = SharedFixture();
    JointModel model = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                          6, 42);
    const std::vector<double> before = FlattenParams(model);
    TrainConfig cfg = SmallTrain();
    cfg.learning_rate = 0.0;
    cfg.stage1_epochs = 1;
    TrainStage1(model, fx.train_speakers, cfg);
    CHECK(FlattenParams(model) == before);
  }

  TEST_CASE("all-zero loss weights leave parameters unchanged") {
    const Fixture &fx = SharedFixture();
    JointModel model = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                          6, 42);
    const std::vector<double> before = FlattenParams(model);
    TrainConfig cfg = SmallTrain();
    cfg.stage2_epochs = 1;
    cfg.weights.w_aam = 0.0;
    cfg.weights.w_vad = 0.0;
    cfg.weights.w_osd = 0.0;
    TrainStage2(model, fx.train_speakers, fx.diarized, cfg);
    CHECK(FlattenParams(model) == before);
  }

  TEST_CASE("stage 1 never touches the heads; empty diarized batch neither") {
    const Fixture &fx = SharedFixture();
    JointModel model = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                          6, 42);
    const std::vector<double> heads_before = HeadParams(model);
    TrainConfig cfg = SmallTrain();
    cfg.stage1_epochs = 1;
    TrainStage1(model, fx.train_speakers, cfg);
    CHECK(HeadParams(model) == heads_before);

    // Stage 2 with an empty diarized corpus cannot move the heads either.
    DiarizedCorpus empty;
    cfg.stage2_epochs = 1;
    TrainStage2(model, fx.train_speakers, empty, cfg);
    CHECK(HeadParams(model) == heads_before);
  }

  TEST_CASE("training is deterministic under a fixed seed") {
    const Fixture &fx = SharedFixture();
    TrainConfig cfg = SmallTrain();
    cfg.stage1_epochs = 1;
    JointModel a = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame, 6, 7);
    JointModel b = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame, 6, 7);
    TrainStage1(a, fx.train_speakers, cfg);
    TrainStage1(b, fx.train_speakers, cfg);
    CHECK(FlattenParams(a) == FlattenParams(b));
  }

  TEST_CASE("stage 1 reduces the AAM loss and beats chance on held-out data") {
    const Fixture &fx = SharedFixture();
    JointModel model = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                          6, 42);
    TrainConfig cfg = SmallTrain();
    cfg.stage1_epochs = 12;
    const auto log = TrainStage1(model, fx.train_speakers, cfg);
    REQUIRE(!log.empty());
    double first_epoch = 0.0, last_epoch = 0.0;
    int first_n = 0, last_n = 0;
    for (const auto &e : log) {
      if (e.epoch == 0) {
        first_epoch += e.l_aam;
        ++first_n;
      }
      if (e.epoch == cfg.stage1_epochs - 1) {
        last_epoch += e.l_aam;
        ++last_n;
      }
    }
    CHECK(last_epoch / last_n < first_epoch / first_n);

    const double acc =
        SpeakerClassificationAccuracy(model, fx.heldout_speakers, cfg.mel);
    CHECK(acc > 1.0 / 6.0);
  }

  TEST_CASE("stage 2 trains the heads; skipping AAM hurts speaker accuracy") {
    const Fixture &fx = SharedFixture();
    JointModel base = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                         6, 42);
    TrainConfig cfg = SmallTrain();
    cfg.stage1_epochs = 12;
    TrainStage1(base, fx.train_speakers, cfg);
    const double acc_before =
        SpeakerClassificationAccuracy(base, fx.heldout_speakers, cfg.mel);

    JointModel with_aam = base;
    JointModel without_aam = base;
    cfg.stage2_epochs = 10;
    TrainStage2(with_aam, fx.train_speakers, fx.diarized, cfg);

    TrainConfig no_aam = cfg;
    no_aam.weights.w_aam = 0.0;
    TrainStage2(without_aam, fx.train_speakers, fx.diarized, no_aam);

    const double acc_with =
        SpeakerClassificationAccuracy(with_aam, fx.heldout_speakers, cfg.mel);
    const double acc_without = SpeakerClassificationAccuracy(
        without_aam, fx.heldout_speakers, cfg.mel);
    CAPTURE(acc_before);
    CAPTURE(acc_with);
    CAPTURE(acc_without);
    CHECK(acc_without < acc_with);

    // The heads did move in stage 2.
    CHECK(HeadParams(with_aam) != HeadParams(base));
  }

  TEST_CASE("fine-tuning: zero epochs is the identity, log has entries") {
    const Fixture &fx = SharedFixture();
    JointModel model = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                          6, 42);
    TrainConfig cfg = SmallTrain();
    cfg.stage2_epochs = 0;
    const std::vector<double> before = FlattenParams(model);
    const auto empty_log = FinetuneVadOsd(model, fx.train_speakers, fx.diarized, cfg);
    CHECK(FlattenParams(model) == before);
    CHECK(empty_log.empty());

    cfg.stage2_epochs = 1;
    const auto log = FinetuneVadOsd(model, fx.train_speakers, fx.diarized, cfg);
    CHECK(!log.empty());
    for (const auto &e : log) {
      CHECK(std::isfinite(e.l_vad));
      CHECK(std::isfinite(e.l_osd));
    }
  }

  TEST_CASE("training requires >= 2 speakers and a per-frame model") {
    const Fixture &fx = SharedFixture();
    TrainConfig cfg = SmallTrain();
    SpeakerCorpus single;
    single.speaker_names = {"only"};
    single.utterances = {{fx.train_speakers.utterances[0].wav_path, 0}};
    JointModel model = JointModel::Create(SmallEncoder(), ModelMode::kPerFrame,
                                          2, 1);
    CHECK_THROWS_AS(TrainStage1(model, single, cfg), ContractError);

    JointModel seg = JointModel::Create(SmallEncoder(), ModelMode::kPerSegment,
                                        6, 1);
    CHECK_THROWS_AS(TrainStage1(seg, fx.train_speakers, cfg), ContractError);
  }
}
