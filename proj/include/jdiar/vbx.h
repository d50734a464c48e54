// include/jdiar/vbx.h

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

#ifndef JDIAR_VBX_H_
#define JDIAR_VBX_H_

#include <functional>
#include <vector>

#include "jdiar/der-metrics.h"
#include "jdiar/plda.h"
#include "jdiar/tensor.h"

namespace jdiar {

struct VBxConfig {
  double fa = 0.3;    // acoustic (emission) scaling
  double fb = 8.0;    // speaker-prior scaling
  double ploop = 0.9; // self-transition probability
  int latent_dim = 128;
  int max_iters = 40;
  double elbo_tol = 1e-4;
  double min_speaker_mass = 1.0;  // frame-equivalents
  double ahc_threshold = 0.0;

  void Validate() const;
};

struct ClusteringResult {
  Tensor gamma;                   // T' x S posterior responsibilities
  std::vector<int> hard_labels;   // per-frame argmax
  std::vector<double> elbo_trace; // one value per iteration

  int NumSpeakers() const { return gamma.cols(); }
};

// Average-linkage agglomeration on a pairwise similarity matrix
// (T' x T', symmetric); merging stops when the best pair's linkage score
// drops below tau. Implemented with the nearest-neighbor chain, which
// yields the same flat clustering as greedy merging for this linkage.
// Returned labels are numbered by first frame occurrence.
std::vector<int> AhcLabelsFromSimilarity(const Tensor &similarity, double tau);

// Pairwise PLDA LLR in a prepared latent space.
Tensor PairwiseLlrMatrix(const LatentSpace &space, const Tensor &projected);

// AHC over raw embeddings with exact (full-rank) PLDA scores.
std::vector<int> AhcInit(const Tensor &embeddings, const PLDAModel &model,
                         double tau);

// VB-HMM refinement over projected embeddings x (T' x R):
// speaker latents y_s ~ N(0, I_R), emissions N(x_t; diag(sqrt(psi)) y_s, I),
// hidden speaker sequence Markov with
//   P(z_t = s | z_{t-1} = s') = ploop * delta(s, s') + (1 - ploop) * pi_s.
// Iterates q(y) updates, scaled-emission forward-backward, pi re-estimation
// from expected draw counts, and speaker dropping, until |dELBO| < tol or
// max_iters. With fa = fb = 1 and no drops the ELBO trace is exact
// coordinate ascent and never decreases.
ClusteringResult VbxRefine(const Tensor &projected,
                           const std::vector<int> &init_labels,
                           const std::vector<double> &psi,
                           const VBxConfig &cfg);

struct GridPoint {
  VBxConfig config;
  double der_pct = 0.0;
};

struct GridSearchResult {
  VBxConfig best;
  double best_der_pct = 0.0;
  std::vector<GridPoint> evaluated;  // grid order
};

// Exhaustive evaluation of the (fa, fb, ploop, tau) grid by corpus-level
// DER; per-(recording, config) results are cached so every pair is scored
// exactly once. Ties break toward smaller ploop, then fa, then fb, then tau.
GridSearchResult GridSearchHyperparams(
    const VBxConfig &base, const std::vector<double> &fa_grid,
    const std::vector<double> &fb_grid, const std::vector<double> &ploop_grid,
    const std::vector<double> &tau_grid, int num_recordings,
    const std::function<DERBreakdown(int recording, const VBxConfig &)> &score);

}  // namespace jdiar

#endif  // JDIAR_VBX_H_
