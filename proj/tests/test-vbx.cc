// tests/test-vbx.cc

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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "jdiar/vbx.h"
#include "testing-util.h"

using namespace jdiar;

namespace {

// Emits x_t = sqrt(psi) .* y_{z_t} + noise for a given state sequence.
Tensor EmitSequence(Rng &rng, const std::vector<int> &states,
                    const std::vector<std::vector<double>> &latents,
                    const std::vector<double> &psi) {
  const int r = static_cast<int>(psi.size());
  Tensor x({static_cast<int>(states.size()), r});
  for (size_t t = 0; t < states.size(); ++t) {
    for (int d = 0; d < r; ++d) {
      x.at(static_cast<int>(t), d) =
          std::sqrt(psi[d]) * latents[states[t]][d] + rng.Normal();
    }
  }
  return x;
}

std::vector<std::vector<double>> SampleLatents(Rng &rng, int speakers, int r) {
  std::vector<std::vector<double>> latents(speakers, std::vector<double>(r));
  for (auto &y : latents) {
    for (double &v : y) v = rng.Normal();
  }
  return latents;
}

double FrameErrorUpToPermutation(const std::vector<int> &truth,
                                 const std::vector<int> &got) {
  std::set<int> labels(got.begin(), got.end());
  std::set<int> true_labels(truth.begin(), truth.end());
  // Co-occurrence matrix -> optimal assignment.
  std::map<int, int> tmap, gmap;
  for (int t : true_labels) tmap.emplace(t, static_cast<int>(tmap.size()));
  for (int g : labels) gmap.emplace(g, static_cast<int>(gmap.size()));
  std::vector<std::vector<double>> cooc(tmap.size(),
                                        std::vector<double>(gmap.size(), 0.0));
  for (size_t i = 0; i < truth.size(); ++i) {
    cooc[tmap[truth[i]]][gmap[got[i]]] += 1.0;
  }
  const std::vector<int> assign = MaxWeightAssignment(cooc);
  double correct = 0.0;
  for (size_t i = 0; i < tmap.size(); ++i) {
    if (assign[i] >= 0) correct += cooc[i][assign[i]];
  }
  return 1.0 - correct / truth.size();
}

}  // namespace

TEST_SUITE("ahc") {
  TEST_CASE("threshold extremes give singletons and one cluster") {
    Rng rng(5);
    Tensor sim = jdiar_test::RandomTensor(rng, {12, 12}, -5.0, 5.0);
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < i; ++j) sim.at(j, i) = sim.at(i, j);
    }
    const auto singles = AhcLabelsFromSimilarity(
        sim, std::numeric_limits<double>::infinity());
    std::set<int> unique(singles.begin(), singles.end());
    CHECK(unique.size() == 12);

    const auto one = AhcLabelsFromSimilarity(
        sim, -std::numeric_limits<double>::infinity());
    for (int label : one) CHECK(label == 0);
  }

  TEST_CASE("two well-separated clusters are recovered at tau = 0") {
    Rng rng(7);
    const int d = 4;
    PLDAModel model;
    model.mean.assign(d, 0.0);
    model.across_class = Tensor({d, d});
    model.within_class = Tensor({d, d});
    for (int i = 0; i < d; ++i) {
      model.across_class.at(i, i) = 9.0;
      model.within_class.at(i, i) = 1.0;
    }
    // Two speakers with distinct latent means.
    Tensor emb({40, d});
    std::vector<int> truth(40);
    for (int t = 0; t < 40; ++t) {
      const int spk = t < 20 ? 0 : 1;
      truth[t] = spk;
      for (int j = 0; j < d; ++j) {
        const double mean = spk == 0 ? 3.0 : -3.0;
        emb.at(t, j) = mean + rng.Normal();
      }
    }
    const auto labels = AhcInit(emb, model, 0.0);
    CHECK(FrameErrorUpToPermutation(truth, labels) == doctest::Approx(0.0));
    std::set<int> unique(labels.begin(), labels.end());
    CHECK(unique.size() == 2);
  }
}

TEST_SUITE("vbx") {
  TEST_CASE("exact inference: ELBO never decreases with fa = fb = 1") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(1000 + seed);
      const int r = 3 + static_cast<int>(rng.UniformInt(0, 3));
      const int t_frames = 40 + static_cast<int>(rng.UniformInt(0, 80));
      const int speakers = 2 + static_cast<int>(rng.UniformInt(0, 2));
      std::vector<double> psi(r);
      for (double &v : psi) v = rng.Uniform(0.3, 6.0);
      Tensor x = jdiar_test::RandomTensor(rng, {t_frames, r}, -3.0, 3.0);
      std::vector<int> init(t_frames);
      for (int t = 0; t < t_frames; ++t) {
        init[t] = static_cast<int>(rng.UniformInt(0, speakers - 1));
      }
      VBxConfig cfg;
      cfg.fa = 1.0;
      cfg.fb = 1.0;
      cfg.ploop = rng.Uniform(0.3, 0.95);
      cfg.latent_dim = r;
      cfg.max_iters = 12;
      cfg.elbo_tol = 0.0;
      cfg.min_speaker_mass = 0.0;  // keep the speaker set fixed
      const ClusteringResult result = VbxRefine(x, init, psi, cfg);
      REQUIRE(result.elbo_trace.size() >= 2);
      for (size_t i = 1; i < result.elbo_trace.size(); ++i) {
        CHECK(result.elbo_trace[i] >= result.elbo_trace[i - 1] - 1e-10);
      }
      for (int t = 0; t < result.gamma.rows(); ++t) {
        double row = 0.0;
        for (int s = 0; s < result.gamma.cols(); ++s) row += result.gamma.at(t, s);
        CHECK(std::fabs(row - 1.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("alternating two-speaker sequence is resegmented correctly") {
    Rng rng(31);
    const int r = 4;
    std::vector<double> psi = {8.0, 6.0, 5.0, 4.0};
    const auto latents = SampleLatents(rng, 2, r);
    std::vector<int> truth;
    int state = 0;
    while (truth.size() < 300) {
      const int run = 20 + static_cast<int>(rng.UniformInt(0, 20));
      for (int i = 0; i < run; ++i) truth.push_back(state);
      state = 1 - state;
    }
    truth.resize(300);
    const Tensor x = EmitSequence(rng, truth, latents, psi);

    // Deliberately noisy init: flip 20% of a shifted copy of the truth.
    std::vector<int> init = truth;
    for (size_t t = 0; t < init.size(); ++t) {
      if (rng.Uniform() < 0.2) init[t] = 1 - init[t];
    }
    VBxConfig cfg;
    cfg.fa = 1.0;
    cfg.fb = 1.0;
    cfg.ploop = 0.95;
    cfg.latent_dim = r;
    const ClusteringResult result = VbxRefine(x, init, psi, cfg);
    CHECK(FrameErrorUpToPermutation(truth, result.hard_labels) < 0.02);
  }

  TEST_CASE("over-clustered init collapses to the true speaker count") {
    Rng rng(37);
    const int r = 4;
    std::vector<double> psi = {9.0, 7.0, 6.0, 5.0};
    const auto latents = SampleLatents(rng, 2, r);
    std::vector<int> truth;
    for (int block = 0; block < 10; ++block) {
      for (int i = 0; i < 40; ++i) truth.push_back(block % 2);
    }
    const Tensor x = EmitSequence(rng, truth, latents, psi);
    // Split each true speaker into two initial clusters.
    std::vector<int> init(truth.size());
    for (size_t t = 0; t < truth.size(); ++t) {
      init[t] = truth[t] * 2 + (t % 2);
    }
    VBxConfig cfg;
    cfg.fa = 1.0;
    cfg.fb = 4.0;
    cfg.ploop = 0.9;
    cfg.latent_dim = r;
    cfg.min_speaker_mass = 1.0;
    const ClusteringResult result = VbxRefine(x, init, psi, cfg);
    CHECK(result.NumSpeakers() == 2);
    CHECK(FrameErrorUpToPermutation(truth, result.hard_labels) < 0.02);
  }

  TEST_CASE("permuting initial labels permutes the output") {
    Rng rng(41);
    const int r = 3;
    std::vector<double> psi = {5.0, 4.0, 3.0};
    const auto latents = SampleLatents(rng, 3, r);
    std::vector<int> truth;
    for (int block = 0; block < 9; ++block) {
      for (int i = 0; i < 25; ++i) truth.push_back(block % 3);
    }
    const Tensor x = EmitSequence(rng, truth, latents, psi);
    std::vector<int> init = truth;
    std::vector<int> permuted(init.size());
    const int perm[3] = {2, 0, 1};
    for (size_t t = 0; t < init.size(); ++t) permuted[t] = perm[init[t]];

    VBxConfig cfg;
    cfg.fa = 1.0;
    cfg.fb = 1.0;
    cfg.ploop = 0.9;
    cfg.latent_dim = r;
    cfg.min_speaker_mass = 0.0;
    const ClusteringResult a = VbxRefine(x, init, psi, cfg);
    const ClusteringResult b = VbxRefine(x, permuted, psi, cfg);
    REQUIRE(a.hard_labels.size() == b.hard_labels.size());
    for (size_t t = 0; t < a.hard_labels.size(); ++t) {
      CHECK(b.hard_labels[t] == perm[a.hard_labels[t]]);
    }
  }

  TEST_CASE("empty input gives an empty result") {
    VBxConfig cfg;
    const ClusteringResult result = VbxRefine(Tensor({0, 3}), {}, {1, 1, 1}, cfg);
    CHECK(result.hard_labels.empty());
    CHECK(result.elbo_trace.empty());
  }
}

TEST_SUITE("grid_search") {
  TEST_CASE("singleton grid returns its only point") {
    VBxConfig base;
    const auto result = GridSearchHyperparams(
        base, {0.4}, {6.0}, {0.8}, {0.1}, 2,
        [](int, const VBxConfig &) {
          DERBreakdown der;
          der.der_pct = 12.5;
          der.ref_speech_s = 10.0;
          return der;
        });
    CHECK(result.best.fa == doctest::Approx(0.4));
    CHECK(result.best.ahc_threshold == doctest::Approx(0.1));
    CHECK(result.best_der_pct == doctest::Approx(12.5));
  }

  TEST_CASE("the known-optimal configuration is selected, scored once") {
    VBxConfig base;
    int calls = 0;
    const std::vector<double> fa = {0.1, 0.3, 1.0};
    const std::vector<double> ploop = {0.5, 0.9};
    const auto result = GridSearchHyperparams(
        base, fa, {8.0}, ploop, {0.0}, 3,
        [&](int rec, const VBxConfig &cfg) {
          ++calls;
          DERBreakdown der;
          der.ref_speech_s = 100.0 + rec;
          // Unique minimum at fa = 0.3, ploop = 0.9.
          der.der_pct = 10.0 + 50.0 * std::fabs(cfg.fa - 0.3) +
                        20.0 * std::fabs(cfg.ploop - 0.9);
          return der;
        });
    CHECK(result.best.fa == doctest::Approx(0.3));
    CHECK(result.best.ploop == doctest::Approx(0.9));
    CHECK(calls == 3 * 2 * 3);  // one evaluation per (recording, config)
    CHECK(result.evaluated.size() == 6);
  }

  TEST_CASE("ties break toward smaller ploop then smaller fa") {
    VBxConfig base;
    const auto result = GridSearchHyperparams(
        base, {0.2, 0.4}, {4.0}, {0.6, 0.8}, {0.0}, 1,
        [](int, const VBxConfig &) {
          DERBreakdown der;
          der.der_pct = 5.0;
          der.ref_speech_s = 50.0;
          return der;
        });
    CHECK(result.best.ploop == doctest::Approx(0.6));
    CHECK(result.best.fa == doctest::Approx(0.2));
  }

  TEST_CASE("empty grids are rejected") {
    VBxConfig base;
    CHECK_THROWS_AS(
        GridSearchHyperparams(base, {}, {1.0}, {0.5}, {0.0}, 1,
                              [](int, const VBxConfig &) {
                                return DERBreakdown();
                              }),
        ConfigError);
  }
}
