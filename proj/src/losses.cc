// src/losses.cc

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

#include "jdiar/losses.h"

#include <cmath>
#include <memory>

namespace jdiar {

void AAMConfig::Validate() const {
  if (!(scale_s > 0.0)) throw ConfigError("aam: scale must be positive");
  if (!(margin_m >= 0.0 && margin_m < M_PI / 2.0)) {
    throw ConfigError("aam: margin must be in [0, pi/2)");
  }
  if (num_classes < 1) throw ConfigError("aam: num_classes must be >= 1");
}

namespace {

// Replaces the target-class cosine with cos(theta + m); other entries
// pass through unchanged. Cosines are clamped to the open interval
// (-1, 1) before the angle shift so the derivative stays finite.
Var CosMarginTaped(Tape &tape, Var cosines, const std::vector<int> &labels,
                   double margin) {
  const Tensor &cos_in = tape.value(cosines);
  const int b = cos_in.rows();
  const double cos_m = std::cos(margin), sin_m = std::sin(margin);
  constexpr double kClamp = 1.0 - 1e-12;

  Tensor out = cos_in;
  std::vector<char> clamped(b, 0);
  for (int i = 0; i < b; ++i) {
    const double raw = cos_in.at(i, labels[i]);
    double cv = std::clamp(raw, -kClamp, kClamp);
    if (cv != raw) clamped[i] = 1;
    out.at(i, labels[i]) = cv * cos_m - std::sqrt(1.0 - cv * cv) * sin_m;
  }
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  auto clamped_copy = std::make_shared<std::vector<char>>(std::move(clamped));
  return tape.Custom(
      std::move(out), {cosines},
      [labels_copy, clamped_copy, cos_m, sin_m](
          const Tensor &, const Tensor &dout,
          const std::vector<const Tensor *> &in,
          const std::vector<Tensor *> &din) {
        const Tensor &cv = *in[0];
        Tensor &dc = *din[0];
        const int rows = cv.rows(), cols = cv.cols();
        for (int i = 0; i < rows; ++i) {
          const int y = (*labels_copy)[i];
          for (int j = 0; j < cols; ++j) {
            const double g = dout.at(i, j);
            if (g == 0.0) continue;
            if (j != y) {
              dc.at(i, j) += g;
            } else if (!(*clamped_copy)[i]) {
              const double cval = cv.at(i, y);
              const double s = std::sqrt(1.0 - cval * cval);
              dc.at(i, y) += g * (cos_m + cval * sin_m / s);
            }
            // Clamped target cosines are locally constant.
          }
        }
      });
}

}  // namespace

Var AamSoftmaxLossTaped(Tape &tape, Var embeddings,
                        const std::vector<int> &labels, Var classifier,
                        const AAMConfig &cfg) {
  cfg.Validate();
  const int b = tape.value(embeddings).rows();
  if (static_cast<int>(labels.size()) != b) {
    throw ContractError("aam: label count does not match batch size");
  }
  for (int y : labels) {
    if (y < 0 || y >= cfg.num_classes) {
      throw ContractError("aam: label out of range");
    }
  }
  Var e_norm = tape.LengthNormalize(embeddings);
  Var w_norm = tape.LengthNormalize(classifier);
  Var cosines = tape.MatMul(e_norm, w_norm, /*transpose_b=*/true);
  Var logits = cosines;
  if (cfg.margin_m != 0.0) {
    logits = CosMarginTaped(tape, cosines, labels, cfg.margin_m);
  }
  logits = tape.Scale(logits, cfg.scale_s);
  Var log_probs = tape.Log(tape.Softmax(logits));

  Tensor onehot({b, cfg.num_classes});
  for (int i = 0; i < b; ++i) onehot.at(i, labels[i]) = 1.0;
  return tape.Scale(tape.MaskedSum(log_probs, std::move(onehot)), -1.0 / b);
}

Var VadBceTaped(Tape &tape, Var probs, const std::vector<int> &labels) {
  const size_t t = tape.value(probs).size();
  if (labels.size() != t) {
    throw ContractError("vad_bce: label count does not match frame count");
  }
  if (t == 0) return tape.Constant(Tensor::Scalar(0.0));
  const auto &shape = tape.value(probs).shape();
  Tensor pos(shape), neg(shape);
  for (size_t i = 0; i < t; ++i) {
    pos[i] = labels[i] ? 1.0 : 0.0;
    neg[i] = labels[i] ? 0.0 : 1.0;
  }
  Tensor ones(shape);
  for (size_t i = 0; i < t; ++i) ones[i] = 1.0;
  Var one_minus = tape.Add(tape.Scale(probs, -1.0), tape.Constant(ones));
  Var term = tape.Add(tape.MaskedSum(tape.Log(probs), std::move(pos)),
                      tape.MaskedSum(tape.Log(one_minus), std::move(neg)));
  return tape.Scale(term, -1.0 / static_cast<double>(t));
}

Var OsdBceTaped(Tape &tape, Var probs, const std::vector<int> &labels,
                const std::vector<int> &speech_mask) {
  const size_t t = tape.value(probs).size();
  if (labels.size() != t || speech_mask.size() != t) {
    throw ContractError("osd_bce: label/mask count does not match frame count");
  }
  size_t masked = 0;
  for (int m : speech_mask) masked += m ? 1 : 0;
  if (masked == 0) return tape.Constant(Tensor::Scalar(0.0));

  const auto &shape = tape.value(probs).shape();
  Tensor pos(shape), neg(shape), ones(shape);
  for (size_t i = 0; i < t; ++i) {
    const double m = speech_mask[i] ? 1.0 : 0.0;
    pos[i] = m * (labels[i] ? 1.0 : 0.0);
    neg[i] = m * (labels[i] ? 0.0 : 1.0);
    ones[i] = 1.0;
  }
  Var one_minus = tape.Add(tape.Scale(probs, -1.0), tape.Constant(ones));
  Var term = tape.Add(tape.MaskedSum(tape.Log(probs), std::move(pos)),
                      tape.MaskedSum(tape.Log(one_minus), std::move(neg)));
  return tape.Scale(term, -1.0 / static_cast<double>(masked));
}

namespace {

// sum over masked frames of softplus(z) - y * z, divided by denom.
Var MaskedBceFromLogits(Tape &tape, Var logits, std::vector<double> targets,
                        std::vector<double> mask, double denom) {
  const Tensor &z = tape.value(logits);
  double total = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double v = z[i];
    const double softplus = std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
    total += softplus - targets[i] * v;
  }
  auto t_copy = std::make_shared<std::vector<double>>(std::move(targets));
  auto m_copy = std::make_shared<std::vector<double>>(std::move(mask));
  return tape.Custom(
      Tensor::Scalar(total / denom), {logits},
      [t_copy, m_copy, denom](const Tensor &, const Tensor &dout,
                              const std::vector<const Tensor *> &in,
                              const std::vector<Tensor *> &din) {
        const Tensor &z = *in[0];
        Tensor &dz = *din[0];
        const double g = dout[0] / denom;
        for (size_t i = 0; i < z.size(); ++i) {
          if ((*m_copy)[i] == 0.0) continue;
          const double v = z[i];
          const double sig = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                      : std::exp(v) / (1.0 + std::exp(v));
          dz[i] += g * (sig - (*t_copy)[i]);
        }
      });
}

}  // namespace

Var VadBceWithLogitsTaped(Tape &tape, Var logits,
                          const std::vector<int> &labels) {
  const size_t t = tape.value(logits).size();
  if (labels.size() != t) {
    throw ContractError("vad_bce: label count does not match frame count");
  }
  if (t == 0) return tape.Constant(Tensor::Scalar(0.0));
  std::vector<double> targets(t), mask(t, 1.0);
  for (size_t i = 0; i < t; ++i) targets[i] = labels[i] ? 1.0 : 0.0;
  return MaskedBceFromLogits(tape, logits, std::move(targets), std::move(mask),
                             static_cast<double>(t));
}

Var OsdBceWithLogitsTaped(Tape &tape, Var logits, const std::vector<int> &labels,
                          const std::vector<int> &speech_mask) {
  const size_t t = tape.value(logits).size();
  if (labels.size() != t || speech_mask.size() != t) {
    throw ContractError("osd_bce: label/mask count does not match frame count");
  }
  size_t masked = 0;
  for (int m : speech_mask) masked += m ? 1 : 0;
  if (masked == 0) return tape.Constant(Tensor::Scalar(0.0));
  std::vector<double> targets(t), mask(t);
  for (size_t i = 0; i < t; ++i) {
    targets[i] = labels[i] ? 1.0 : 0.0;
    mask[i] = speech_mask[i] ? 1.0 : 0.0;
  }
  return MaskedBceFromLogits(tape, logits, std::move(targets), std::move(mask),
                             static_cast<double>(masked));
}

Var CombinedLossTaped(Tape &tape, Var l_aam, Var l_vad, Var l_osd,
                      const LossWeights &w) {
  Var sum = tape.Add(tape.Scale(l_aam, w.w_aam), tape.Scale(l_vad, w.w_vad));
  return tape.Add(sum, tape.Scale(l_osd, w.w_osd));
}

double AamSoftmaxLoss(const Tensor &embeddings, const std::vector<int> &labels,
                      const Tensor &classifier, const AAMConfig &cfg) {
  Tape tape;
  Var loss = AamSoftmaxLossTaped(tape, tape.Constant(embeddings), labels,
                                 tape.Constant(classifier), cfg);
  return tape.value(loss)[0];
}

double VadBce(const std::vector<double> &probs, const std::vector<int> &labels) {
  Tape tape;
  Tensor p({static_cast<int>(probs.size())}, probs);
  Var loss = VadBceTaped(tape, tape.Constant(std::move(p)), labels);
  return tape.value(loss)[0];
}

double OsdBce(const std::vector<double> &probs, const std::vector<int> &labels,
              const std::vector<int> &speech_mask) {
  Tape tape;
  Tensor p({static_cast<int>(probs.size())}, probs);
  Var loss = OsdBceTaped(tape, tape.Constant(std::move(p)), labels, speech_mask);
  return tape.value(loss)[0];
}

double CombinedLoss(double l_aam, double l_vad, double l_osd,
                    const LossWeights &w) {
  CheckFinite(l_aam, "combined_loss aam component");
  CheckFinite(l_vad, "combined_loss vad component");
  CheckFinite(l_osd, "combined_loss osd component");
  return w.w_aam * l_aam + w.w_vad * l_vad + w.w_osd * l_osd;
}

}  // namespace jdiar
