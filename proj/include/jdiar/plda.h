// include/jdiar/plda.h

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

#ifndef JDIAR_PLDA_H_
#define JDIAR_PLDA_H_

#include <string>
#include <vector>

#include "jdiar/tensor.h"

namespace jdiar {

// Two-covariance PLDA: speaker means y ~ N(mean, across_class),
// observations x ~ N(y, within_class).
struct PLDAModel {
  std::vector<double> mean;
  Tensor across_class;  // symmetric PSD
  Tensor within_class;  // symmetric PD

  int Dim() const { return static_cast<int>(mean.size()); }

  // Versioned binary container, bit-exact round-trip.
  void Save(const std::string &path) const;
  static PLDAModel Load(const std::string &path);
};

struct PldaTrainOptions {
  int max_iters = 10;
  // Relative ridge added to a singular within-class estimate.
  double ridge_rel = 1e-6;
};

struct PldaTrainResult {
  PLDAModel model;
  std::vector<double> loglik_trace;  // per EM iteration, non-decreasing
};

// EM fit; requires >= 2 speakers and >= 2 embeddings for some speaker.
PldaTrainResult TrainPlda(const Tensor &embeddings,
                          const std::vector<int> &speaker_labels,
                          const PldaTrainOptions &opts = PldaTrainOptions());

// Simultaneous diagonalization: projection whitens within_class and
// diagonalizes across_class; psi holds the top-R across-class variances
// in descending order.
struct LatentSpace {
  std::vector<double> mean;
  Tensor projection;        // R x d
  std::vector<double> psi;  // R, descending, >= 0

  int LatentDim() const { return static_cast<int>(psi.size()); }
  std::vector<double> Project(const std::vector<double> &x) const;
  Tensor ProjectRows(const Tensor &embeddings) const;  // N x R
};

LatentSpace PrepareLatentSpace(const PLDAModel &model, int latent_dim);

// Same/different-speaker log likelihood ratio for two projected vectors;
// exact when the space has full rank.
double LatentPairLlr(const LatentSpace &space, const double *u, const double *v);

// Closed-form Gaussian LLR on raw embeddings.
double PldaLlr(const PLDAModel &model, const std::vector<double> &e1,
               const std::vector<double> &e2);

}  // namespace jdiar

#endif  // JDIAR_PLDA_H_
