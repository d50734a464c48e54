// include/jdiar/losses.h

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

#ifndef JDIAR_LOSSES_H_
#define JDIAR_LOSSES_H_

#include <vector>

#include "jdiar/autodiff.h"
#include "jdiar/tensor.h"

namespace jdiar {

struct AAMConfig {
  double scale_s = 32.0;
  double margin_m = 0.2;  // radians
  int num_classes = 0;

  void Validate() const;
};

// Multi-task combination weights for speaker / VAD / OSD losses.
struct LossWeights {
  double w_aam = 1.0;
  double w_vad = 5.0;
  double w_osd = 2.0;
};

// Additive angular margin softmax: cos(theta_j) from length-normalized
// embeddings and classifier rows, target logit s*cos(theta_y + m), mean
// cross-entropy over the batch.
Var AamSoftmaxLossTaped(Tape &tape, Var embeddings,
                        const std::vector<int> &labels, Var classifier,
                        const AAMConfig &cfg);

// Mean BCE over all frames. `probs` is a T'x1 (or length-T') node of
// probabilities strictly inside (0, 1).
Var VadBceTaped(Tape &tape, Var probs, const std::vector<int> &labels);

// Mean BCE restricted to frames with speech_mask == 1; exactly 0 (and
// gradient-free) when the mask is empty.
Var OsdBceTaped(Tape &tape, Var probs, const std::vector<int> &labels,
                const std::vector<int> &speech_mask);

Var CombinedLossTaped(Tape &tape, Var l_aam, Var l_vad, Var l_osd,
                      const LossWeights &w);

// Numerically fused BCE on logits (softplus form); gradient with respect
// to a logit is sigmoid(z) - y, which stays useful even when the sigmoid
// saturates. Training uses these; the probability forms above are the
// reported quantities.
Var VadBceWithLogitsTaped(Tape &tape, Var logits, const std::vector<int> &labels);
Var OsdBceWithLogitsTaped(Tape &tape, Var logits, const std::vector<int> &labels,
                          const std::vector<int> &speech_mask);

// Convenience scalar forms of the same computations.
double AamSoftmaxLoss(const Tensor &embeddings, const std::vector<int> &labels,
                      const Tensor &classifier, const AAMConfig &cfg);
double VadBce(const std::vector<double> &probs, const std::vector<int> &labels);
double OsdBce(const std::vector<double> &probs, const std::vector<int> &labels,
              const std::vector<int> &speech_mask);
double CombinedLoss(double l_aam, double l_vad, double l_osd,
                    const LossWeights &w);

}  // namespace jdiar

#endif  // JDIAR_LOSSES_H_
