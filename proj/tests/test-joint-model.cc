// tests/test-joint-model.cc

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
#include "jdiar/joint-model.h"
#include "testing-util.h"

using namespace jdiar;
using jdiar_test::RandomTensor;
using jdiar_test::TempDir;

namespace {

EncoderConfig ToyConfig() {
  EncoderConfig cfg;
  cfg.input_dim = 8;
  cfg.context_frames = 2;
  cfg.hidden_dims = {8, 12};
  cfg.embed_dim = 6;
  return cfg;
}

FeatureMatrix RandomFeatures(Rng &rng, int frames, int dim) {
  FeatureMatrix feats;
  feats.values = RandomTensor(rng, {frames, dim}, -2.0, 2.0);
  feats.frame_shift_ms = 10.0;
  feats.origin_offset_ms = 12.5;
  return feats;
}

}  // namespace

TEST_SUITE("joint_model") {
  TEST_CASE("output frame count floors by the subsample factor") {
    const JointModel model =
        JointModel::Create(ToyConfig(), ModelMode::kPerFrame, 4, 1);
    CHECK(model.OutputFrameCount(0) == 0);
    CHECK(model.OutputFrameCount(799) == 99);
    CHECK(model.OutputFrameCount(800) == 100);
    CHECK(model.OutputFrameCount(98) == 12);
  }

  TEST_CASE("per-frame forward: one output per 80 ms with timestamps") {
    Rng rng(2);
    const JointModel model =
        JointModel::Create(ToyConfig(), ModelMode::kPerFrame, 4, 1);
    const FeatureMatrix feats = RandomFeatures(rng, 800, 8);
    const PerFrameOutput out = model.ForwardPerFrame(feats);
    CHECK(out.NumFrames() == 100);
    CHECK(out.embeddings.cols() == 6);
    CHECK(out.timestamps_s[0] == doctest::Approx(0.0125));
    CHECK(out.timestamps_s[3] == doctest::Approx(0.0125 + 0.240));
    for (int i = 0; i < out.NumFrames(); ++i) {
      CHECK(out.vad_prob[i] > 0.0);
      CHECK(out.vad_prob[i] < 1.0);
      CHECK(out.osd_prob[i] > 0.0);
      CHECK(out.osd_prob[i] < 1.0);
    }

    FeatureMatrix tiny = RandomFeatures(rng, 7, 8);
    CHECK_THROWS_AS(model.ForwardPerFrame(tiny), ContractError);
  }

  TEST_CASE("per-segment pooling and segment slicing") {
    Rng rng(3);
    const JointModel model =
        JointModel::Create(ToyConfig(), ModelMode::kPerSegment, 4, 1);
    const FeatureMatrix feats = RandomFeatures(rng, 600, 8);
    const std::vector<double> emb = model.ForwardPerSegment(feats, 1.0, 2.5);
    CHECK(emb.size() == 6);

    // Two disjoint segments with identical feature content.
    FeatureMatrix repeated;
    repeated.values = Tensor({400, 8});
    for (int t = 0; t < 200; ++t) {
      for (int j = 0; j < 8; ++j) {
        const double v = feats.values.at(t, j);
        repeated.values.at(t, j) = v;
        repeated.values.at(t + 200, j) = v;
      }
    }
    repeated.origin_offset_ms = 12.5;
    // Segment bounds chosen between frame centers: rows 0..199 and 200..399.
    const std::vector<double> e1 = model.ForwardPerSegment(repeated, 0.010, 2.010);
    const std::vector<double> e2 = model.ForwardPerSegment(repeated, 2.010, 4.010);
    for (size_t i = 0; i < e1.size(); ++i) CHECK(e1[i] == e2[i]);

    CHECK_THROWS_AS(model.ForwardPerSegment(feats, 3.0, 3.01), ContractError);
    CHECK_THROWS_AS(model.ForwardPerFrame(feats), ContractError);
  }

  TEST_CASE("constant features give constant encoder rows (std at floor)") {
    const JointModel model =
        JointModel::Create(ToyConfig(), ModelMode::kPerSegment, 4, 5);
    FeatureMatrix feats;
    feats.values = Tensor({160, 8});
    for (size_t i = 0; i < feats.values.size(); ++i) feats.values[i] = 0.7;
    const Tensor enc = model.EncoderForward(feats.values);
    for (int t = 1; t < enc.rows(); ++t) {
      for (int j = 0; j < enc.cols(); ++j) {
        CHECK(enc.at(t, j) == enc.at(0, j));
      }
    }
    const Tensor sd = StdOverTime(enc);
    for (size_t i = 0; i < sd.size(); ++i) {
      CHECK(sd[i] == doctest::Approx(1e-5).epsilon(1e-9));
    }
  }

  TEST_CASE("conversion copies the encoder and re-seeds the heads") {
    Rng rng(4);
    const JointModel seg =
        JointModel::Create(ToyConfig(), ModelMode::kPerSegment, 4, 77);
    const JointModel frame = seg.ConvertToPerFrame(99);
    CHECK(frame.mode() == ModelMode::kPerFrame);
    CHECK(frame.params().Has("vad.w"));
    CHECK(frame.params().Has("osd.w"));

    const FeatureMatrix feats = RandomFeatures(rng, 160, 8);
    const Tensor enc_seg = seg.EncoderForward(feats.values);
    const Tensor enc_frame = frame.EncoderForward(feats.values);
    CHECK(enc_seg.values() == enc_frame.values());

    // Per-segment projection consumed pooled stats; the per-frame one is new.
    CHECK(seg.params().Value("proj.w").rows() == 2 * 12);
    CHECK(frame.params().Value("proj.w").rows() == 12);

    CHECK_THROWS_AS(frame.ConvertToPerFrame(1), ContractError);
  }

  TEST_CASE("aligned segments share encoder activations when context is 0") {
    EncoderConfig cfg = ToyConfig();
    cfg.context_frames = 0;
    const JointModel model =
        JointModel::Create(cfg, ModelMode::kPerSegment, 4, 6);
    Rng rng(6);
    const FeatureMatrix feats = RandomFeatures(rng, 320, 8);
    // Segment of 1.6 s starting exactly at the feature origin covers input
    // frames 0..159, i.e. output frames 0..19 of the full pass.
    const double origin = feats.origin_offset_ms / 1000.0;
    const Tensor full = model.EncoderForward(feats.values);
    auto [first, count] = model.FrameRange(feats, origin, origin + 1.6);
    CHECK(first == 0);
    CHECK(count == 160);
    Tensor slice({count, 8});
    for (int t = 0; t < count; ++t) {
      for (int j = 0; j < 8; ++j) slice.at(t, j) = feats.values.at(first + t, j);
    }
    const Tensor seg_enc = model.EncoderForward(slice);
    REQUIRE(seg_enc.rows() == 20);
    for (int t = 0; t < seg_enc.rows(); ++t) {
      for (int j = 0; j < seg_enc.cols(); ++j) {
        CHECK(seg_enc.at(t, j) == full.at(t, j));
      }
    }
  }

  TEST_CASE("single encoder pass regardless of length") {
    Rng rng(7);
    const JointModel model =
        JointModel::Create(ToyConfig(), ModelMode::kPerFrame, 4, 1);
    for (int frames : {80, 800, 2400}) {
      const FeatureMatrix feats = RandomFeatures(rng, frames, 8);
      ForwardStats stats;
      model.ForwardPerFrame(feats, &stats);
      CHECK(stats.encoder_passes == 1);
    }
  }

  TEST_CASE("taped forward equals the plain forward bit for bit") {
    Rng rng(8);
    JointModel model = JointModel::Create(ToyConfig(), ModelMode::kPerFrame, 4, 9);
    const FeatureMatrix feats = RandomFeatures(rng, 160, 8);
    const PerFrameOutput plain = model.ForwardPerFrame(feats);

    Tape tape(&model.params());
    Var enc = model.EncoderForwardTaped(tape, tape.Constant(feats.values));
    Var emb = model.EmbeddingsTaped(tape, enc);
    Var vad = model.VadProbTaped(tape, emb);
    CHECK(tape.value(emb).values() == plain.embeddings.values());
    for (int i = 0; i < plain.NumFrames(); ++i) {
      CHECK(tape.value(vad)[i] == plain.vad_prob[i]);
    }
  }

  TEST_CASE("checkpoint round-trip is bit-exact") {
    TempDir dir("ckpt");
    const JointModel model =
        JointModel::Create(ToyConfig(), ModelMode::kPerFrame, 7, 1234);
    model.Save(dir.File("m.jdmx"));
    const JointModel loaded = JointModel::Load(dir.File("m.jdmx"));
    CHECK(loaded.mode() == ModelMode::kPerFrame);
    CHECK(loaded.num_classes() == 7);
    CHECK(loaded.seed() == 1234);
    CHECK(loaded.config().hidden_dims == model.config().hidden_dims);
    REQUIRE(loaded.params().entries().size() == model.params().entries().size());
    for (size_t i = 0; i < model.params().entries().size(); ++i) {
      const auto &a = model.params().entries()[i];
      const auto &b = loaded.params().entries()[i];
      CHECK(a.name == b.name);
      CHECK(a.value.values() == b.value.values());
    }

    // Corrupted magic is rejected.
    {
      std::ofstream bad(dir.File("bad.jdmx"), std::ios::binary);
      bad << "NOPE";
    }
    CHECK_THROWS_AS(JointModel::Load(dir.File("bad.jdmx")), FormatError);
  }
}
