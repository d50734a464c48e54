// src/plda.cc

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

#include "jdiar/plda.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "jdiar/linalg.h"

namespace jdiar {

namespace {

// Adds ridge * I with ridge = rel * trace / dim.
void AddRidge(Tensor &m, double rel) {
  const int d = m.rows();
  double trace = 0.0;
  for (int i = 0; i < d; ++i) trace += m.at(i, i);
  const double ridge = rel * std::max(trace, 1e-30) / d;
  for (int i = 0; i < d; ++i) m.at(i, i) += ridge;
}

Tensor CholeskyWithRidge(Tensor m, double rel, const char *what) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return CholeskyFactor(m);
    } catch (const NumericalError &) {
      JD_WARN << "singular " << what << " estimate; adding ridge";
      AddRidge(m, rel);
      rel *= 10.0;
    }
  }
  throw NumericalError(std::string("cannot factor ") + what +
                       " even with ridge");
}

void SymmetrizeInPlace(Tensor &m) {
  const int d = m.rows();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double v = 0.5 * (m.at(i, j) + m.at(j, i));
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  }
}

}  // namespace

PldaTrainResult TrainPlda(const Tensor &embeddings,
                          const std::vector<int> &speaker_labels,
                          const PldaTrainOptions &opts) {
  const int n = embeddings.rows(), d = embeddings.cols();
  if (static_cast<int>(speaker_labels.size()) != n) {
    throw ContractError("plda: label count does not match embedding count");
  }
  std::map<int, int> compact;
  for (int label : speaker_labels) {
    compact.emplace(label, static_cast<int>(compact.size()));
  }
  const int num_speakers = static_cast<int>(compact.size());
  if (num_speakers < 2) throw ContractError("plda: need >= 2 speakers");

  std::vector<int> counts(num_speakers, 0);
  Tensor means({num_speakers, d});
  for (int i = 0; i < n; ++i) {
    const int s = compact[speaker_labels[i]];
    ++counts[s];
    for (int j = 0; j < d; ++j) means.at(s, j) += embeddings.at(i, j);
  }
  if (*std::max_element(counts.begin(), counts.end()) < 2) {
    throw ContractError(
        "plda: within-class covariance unidentifiable with one embedding per "
        "speaker");
  }
  for (int s = 0; s < num_speakers; ++s) {
    for (int j = 0; j < d; ++j) means.at(s, j) /= counts[s];
  }

  // Global second moment, reused across iterations.
  Tensor second_moment({d, d});
  for (int i = 0; i < n; ++i) {
    const double *x = embeddings.data() + static_cast<size_t>(i) * d;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b <= a; ++b) second_moment.at(a, b) += x[a] * x[b];
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < a; ++b) second_moment.at(b, a) = second_moment.at(a, b);
  }

  // Moment-based initialization.
  std::vector<double> mu(d, 0.0);
  for (int s = 0; s < num_speakers; ++s) {
    for (int j = 0; j < d; ++j) mu[j] += means.at(s, j) / num_speakers;
  }
  Tensor across({d, d}), within({d, d});
  for (int s = 0; s < num_speakers; ++s) {
    for (int a = 0; a < d; ++a) {
      const double da = means.at(s, a) - mu[a];
      for (int b = 0; b <= a; ++b) {
        across.at(a, b) += da * (means.at(s, b) - mu[b]) / num_speakers;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const int s = compact[speaker_labels[i]];
    const double *x = embeddings.data() + static_cast<size_t>(i) * d;
    for (int a = 0; a < d; ++a) {
      const double da = x[a] - means.at(s, a);
      for (int b = 0; b <= a; ++b) {
        within.at(a, b) += da * (x[b] - means.at(s, b)) / n;
      }
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < a; ++b) {
      across.at(b, a) = across.at(a, b);
      within.at(b, a) = within.at(a, b);
    }
  }

  PldaTrainResult result;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Tensor chol_w = CholeskyWithRidge(within, opts.ridge_rel, "within-class");
    const Tensor chol_b = CholeskyWithRidge(across, 1e-8, "across-class");
    const Tensor w_inv = CholeskyInverse(chol_w);
    const Tensor b_inv = CholeskyInverse(chol_b);
    const double logdet_w = CholeskyLogDet(chol_w);
    const double logdet_b = CholeskyLogDet(chol_b);

    // Posterior precision depends on the speaker only through its count.
    std::map<int, std::pair<Tensor, double>> by_count;  // inv, logdet
    for (int s = 0; s < num_speakers; ++s) {
      if (by_count.count(counts[s])) continue;
      Tensor lambda = b_inv;
      for (size_t i = 0; i < lambda.size(); ++i) {
        lambda[i] += counts[s] * w_inv[i];
      }
      const Tensor chol_lambda = CholeskyFactor(lambda);
      by_count.emplace(counts[s],
                       std::make_pair(CholeskyInverse(chol_lambda),
                                      CholeskyLogDet(chol_lambda)));
    }

    std::vector<double> b_inv_mu(d, 0.0);
    for (int a = 0; a < d; ++a) {
      for (int j = 0; j < d; ++j) b_inv_mu[a] += b_inv.at(a, j) * mu[j];
    }
    double mu_b_mu = 0.0;
    for (int a = 0; a < d; ++a) mu_b_mu += mu[a] * b_inv_mu[a];
    double trace_winv_t2 = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int j = 0; j < d; ++j) {
        trace_winv_t2 += w_inv.at(a, j) * second_moment.at(j, a);
      }
    }

    double loglik = -0.5 * trace_winv_t2 -
                    0.5 * n * d * std::log(2.0 * M_PI) - 0.5 * n * logdet_w -
                    0.5 * num_speakers * (logdet_b + mu_b_mu);

    Tensor posterior_means({num_speakers, d});
    std::vector<double> new_mu(d, 0.0);
    Tensor new_across({d, d}), cross_term({d, d});
    for (int s = 0; s < num_speakers; ++s) {
      const auto &[lambda_inv, logdet_lambda] = by_count.at(counts[s]);
      std::vector<double> h(d);
      for (int a = 0; a < d; ++a) {
        double acc = b_inv_mu[a];
        for (int j = 0; j < d; ++j) {
          acc += w_inv.at(a, j) * counts[s] * means.at(s, j);
        }
        h[a] = acc;
      }
      std::vector<double> y(d, 0.0);
      for (int a = 0; a < d; ++a) {
        for (int j = 0; j < d; ++j) y[a] += lambda_inv.at(a, j) * h[j];
      }
      double h_lambda_h = 0.0;
      for (int a = 0; a < d; ++a) h_lambda_h += h[a] * y[a];
      loglik += 0.5 * (h_lambda_h - logdet_lambda);

      for (int a = 0; a < d; ++a) {
        posterior_means.at(s, a) = y[a];
        new_mu[a] += y[a] / num_speakers;
      }
      // Shared posterior covariance and the within-class cross terms.
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          new_across.at(a, b) += lambda_inv.at(a, b) / num_speakers;
          cross_term.at(a, b) +=
              counts[s] * (y[a] * means.at(s, b) + means.at(s, a) * y[b] -
                           y[a] * y[b] - lambda_inv.at(a, b));
        }
      }
    }
    result.loglik_trace.push_back(loglik);

    for (int s = 0; s < num_speakers; ++s) {
      for (int a = 0; a < d; ++a) {
        const double da = posterior_means.at(s, a) - new_mu[a];
        for (int b = 0; b < d; ++b) {
          new_across.at(a, b) +=
              da * (posterior_means.at(s, b) - new_mu[b]) / num_speakers;
        }
      }
    }
    Tensor new_within({d, d});
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        new_within.at(a, b) =
            (second_moment.at(a, b) - cross_term.at(a, b)) / n;
      }
    }
    SymmetrizeInPlace(new_across);
    SymmetrizeInPlace(new_within);
    mu = std::move(new_mu);
    across = std::move(new_across);
    within = std::move(new_within);
  }

  result.model.mean = mu;
  result.model.across_class = across;
  result.model.within_class = within;
  return result;
}

LatentSpace PrepareLatentSpace(const PLDAModel &model, int latent_dim) {
  const int d = model.Dim();
  if (latent_dim < 1 || latent_dim > d) {
    throw ConfigError("latent space: rank must be in [1, dim]");
  }
  Tensor chol_w;
  try {
    chol_w = CholeskyFactor(model.within_class);
  } catch (const NumericalError &) {
    throw NumericalError("latent space: within-class covariance not PD");
  }
  const Tensor l_inv = LowerTriangularInverse(chol_w);
  // S = L^{-1} B L^{-T}, then diagonalize.
  const Tensor s =
      MatMul(MatMul(l_inv, model.across_class), l_inv, /*transpose_b=*/true);
  Tensor eigvecs;
  std::vector<double> eigvals;
  SymmetricEig(s, &eigvecs, &eigvals);

  LatentSpace space;
  space.mean = model.mean;
  space.psi.resize(latent_dim);
  for (int i = 0; i < latent_dim; ++i) {
    space.psi[i] = std::max(eigvals[i], 0.0);
  }
  // projection = (top-R eigenvector columns)^T * L^{-1}
  space.projection = Tensor({latent_dim, d});
  for (int r = 0; r < latent_dim; ++r) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += eigvecs.at(k, r) * l_inv.at(k, j);
      space.projection.at(r, j) = acc;
    }
  }
  return space;
}

std::vector<double> LatentSpace::Project(const std::vector<double> &x) const {
  const int d = static_cast<int>(mean.size());
  if (static_cast<int>(x.size()) != d) {
    throw DimensionError("latent projection: dimension mismatch");
  }
  const int r = LatentDim();
  std::vector<double> out(r, 0.0);
  std::vector<double> centered(d);
  for (int j = 0; j < d; ++j) centered[j] = x[j] - mean[j];
  for (int i = 0; i < r; ++i) {
    const double *row = projection.data() + static_cast<size_t>(i) * d;
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += row[j] * centered[j];
    out[i] = acc;
  }
  return out;
}

Tensor LatentSpace::ProjectRows(const Tensor &embeddings) const {
  const int d = static_cast<int>(mean.size());
  if (embeddings.cols() != d) {
    throw DimensionError("latent projection: embedding dim mismatch");
  }
  const int n = embeddings.rows(), r = LatentDim();
  Tensor out({n, r});
  for (int i = 0; i < n; ++i) {
    const double *x = embeddings.data() + static_cast<size_t>(i) * d;
    for (int row = 0; row < r; ++row) {
      const double *p = projection.data() + static_cast<size_t>(row) * d;
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += p[j] * (x[j] - mean[j]);
      out.at(i, row) = acc;
    }
  }
  return out;
}

double LatentPairLlr(const LatentSpace &space, const double *u, const double *v) {
  double llr = 0.0;
  for (int i = 0; i < space.LatentDim(); ++i) {
    const double psi = space.psi[i];
    const double uu = u[i], vv = v[i];
    const double ss = uu * uu + vv * vv;
    llr += -0.5 * std::log(2.0 * psi + 1.0) + std::log(psi + 1.0) -
           ((psi + 1.0) * ss - 2.0 * psi * uu * vv) / (2.0 * (2.0 * psi + 1.0)) +
           ss / (2.0 * (psi + 1.0));
  }
  return llr;
}

double PldaLlr(const PLDAModel &model, const std::vector<double> &e1,
               const std::vector<double> &e2) {
  const LatentSpace space = PrepareLatentSpace(model, model.Dim());
  const std::vector<double> u = space.Project(e1);
  const std::vector<double> v = space.Project(e2);
  return LatentPairLlr(space, u.data(), v.data());
}

namespace {

constexpr char kPldaMagic[4] = {'P', 'L', 'D', 'A'};
constexpr uint32_t kPldaVersion = 1;

}  // namespace

void PLDAModel::Save(const std::string &path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write plda model: " + path);
  os.write(kPldaMagic, 4);
  const uint32_t version = kPldaVersion;
  const uint32_t dim = static_cast<uint32_t>(Dim());
  os.write(reinterpret_cast<const char *>(&version), 4);
  os.write(reinterpret_cast<const char *>(&dim), 4);
  os.write(reinterpret_cast<const char *>(mean.data()),
           static_cast<std::streamsize>(mean.size() * sizeof(double)));
  os.write(reinterpret_cast<const char *>(across_class.data()),
           static_cast<std::streamsize>(across_class.size() * sizeof(double)));
  os.write(reinterpret_cast<const char *>(within_class.data()),
           static_cast<std::streamsize>(within_class.size() * sizeof(double)));
  if (!os) throw IoError("short write to plda model: " + path);
}

PLDAModel PLDAModel::Load(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open plda model: " + path);
  char magic[4];
  uint32_t version = 0, dim = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, kPldaMagic, 4) != 0) {
    throw FormatError("bad plda magic in " + path);
  }
  if (!is.read(reinterpret_cast<char *>(&version), 4) ||
      version != kPldaVersion) {
    throw FormatError("unsupported plda version in " + path);
  }
  if (!is.read(reinterpret_cast<char *>(&dim), 4) || dim == 0 || dim > 65536) {
    throw FormatError("bad plda dimension in " + path);
  }
  PLDAModel model;
  model.mean.resize(dim);
  model.across_class = Tensor({static_cast<int>(dim), static_cast<int>(dim)});
  model.within_class = Tensor({static_cast<int>(dim), static_cast<int>(dim)});
  if (!is.read(reinterpret_cast<char *>(model.mean.data()),
               static_cast<std::streamsize>(dim * sizeof(double))) ||
      !is.read(reinterpret_cast<char *>(model.across_class.data()),
               static_cast<std::streamsize>(dim * dim * sizeof(double))) ||
      !is.read(reinterpret_cast<char *>(model.within_class.data()),
               static_cast<std::streamsize>(dim * dim * sizeof(double)))) {
    throw FormatError("truncated plda model: " + path);
  }
  return model;
}

}  // namespace jdiar
