// src/vbx.cc

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

#include "jdiar/vbx.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace jdiar {

void VBxConfig::Validate() const {
  if (!(fa > 0.0) || !(fb > 0.0)) throw ConfigError("vbx: fa, fb must be > 0");
  if (!(ploop > 0.0 && ploop < 1.0)) {
    throw ConfigError("vbx: ploop must be in (0, 1)");
  }
  if (latent_dim < 1) throw ConfigError("vbx: latent_dim must be >= 1");
  if (max_iters < 1) throw ConfigError("vbx: max_iters must be >= 1");
  if (min_speaker_mass < 0.0) {
    throw ConfigError("vbx: min_speaker_mass must be >= 0");
  }
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogSumExp(const double *v, int n) {
  double mx = kNegInf;
  for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(v[i] - mx);
  return mx + std::log(sum);
}

double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

}  // namespace

std::vector<int> AhcLabelsFromSimilarity(const Tensor &similarity, double tau) {
  const int n = similarity.rows();
  if (n == 0) return {};
  if (similarity.cols() != n) {
    throw DimensionError("ahc: similarity matrix must be square");
  }
  if (n == 1) return {0};

  // Work on dissimilarities so "merge while score >= tau" becomes
  // "merge while distance <= -tau".
  std::vector<double> dist(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dist[static_cast<size_t>(i) * n + j] = -similarity.at(i, j);
    }
  }
  std::vector<double> size(n, 1.0);
  std::vector<char> active(n, 1);
  struct Merge {
    int a, b;
    double height;
    int order;
  };
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  std::vector<int> chain;
  chain.reserve(n);
  int num_active = n;

  auto nearest = [&](int x) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    const double *row = dist.data() + static_cast<size_t>(x) * n;
    for (int j = 0; j < n; ++j) {
      if (!active[j] || j == x) continue;
      if (row[j] < best) {
        best = row[j];
        arg = j;
      }
    }
    return std::make_pair(arg, best);
  };

  while (num_active > 1) {
    if (chain.empty()) {
      for (int i = 0; i < n; ++i) {
        if (active[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    int a = -1, b = -1;
    double height = 0.0;
    while (true) {
      const int x = chain.back();
      auto [y, d] = nearest(x);
      if (chain.size() >= 2 && y == chain[chain.size() - 2]) {
        a = std::min(x, y);
        b = std::max(x, y);
        height = d;
        chain.pop_back();
        chain.pop_back();
        break;
      }
      chain.push_back(y);
    }
    merges.push_back({a, b, height, static_cast<int>(merges.size())});
    // Average-linkage Lance-Williams update into row/column a.
    const double wa = size[a], wb = size[b];
    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double d =
          (wa * dist[static_cast<size_t>(a) * n + k] +
           wb * dist[static_cast<size_t>(b) * n + k]) /
          (wa + wb);
      dist[static_cast<size_t>(a) * n + k] = d;
      dist[static_cast<size_t>(k) * n + a] = d;
    }
    size[a] += size[b];
    active[b] = 0;
    --num_active;
  }

  // Cut the dendrogram: replay merges by increasing height while the
  // linkage score (-height) stays at or above tau.
  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge &x, const Merge &y) {
                     if (x.height != y.height) return x.height < y.height;
                     return x.order < y.order;
                   });
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const Merge &m : merges) {
    if (!(-m.height >= tau)) break;
    parent[find(m.b)] = find(m.a);
  }
  std::vector<int> labels(n, -1);
  std::map<int, int> relabel;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    auto it = relabel.emplace(root, static_cast<int>(relabel.size())).first;
    labels[i] = it->second;
  }
  return labels;
}

Tensor PairwiseLlrMatrix(const LatentSpace &space, const Tensor &projected) {
  const int n = projected.rows();
  const int r = projected.cols();
  if (r != space.LatentDim()) {
    throw DimensionError("pairwise llr: latent dimension mismatch");
  }
  Tensor sim({n, n});
  for (int i = 0; i < n; ++i) {
    const double *u = projected.data() + static_cast<size_t>(i) * r;
    for (int j = i; j < n; ++j) {
      const double *v = projected.data() + static_cast<size_t>(j) * r;
      const double llr = LatentPairLlr(space, u, v);
      sim.at(i, j) = llr;
      sim.at(j, i) = llr;
    }
  }
  return sim;
}

std::vector<int> AhcInit(const Tensor &embeddings, const PLDAModel &model,
                         double tau) {
  if (embeddings.rows() == 0) return {};
  const LatentSpace space = PrepareLatentSpace(model, model.Dim());
  const Tensor projected = space.ProjectRows(embeddings);
  return AhcLabelsFromSimilarity(PairwiseLlrMatrix(space, projected), tau);
}

ClusteringResult VbxRefine(const Tensor &projected,
                           const std::vector<int> &init_labels,
                           const std::vector<double> &psi,
                           const VBxConfig &cfg) {
  cfg.Validate();
  const int t_frames = projected.rows();
  const int r = projected.cols();
  ClusteringResult result;
  if (t_frames == 0) {
    result.gamma = Tensor({0, 0});
    return result;
  }
  if (static_cast<int>(init_labels.size()) != t_frames) {
    throw ContractError("vbx: init label count does not match frames");
  }
  if (static_cast<int>(psi.size()) != r) {
    throw DimensionError("vbx: psi size does not match latent dimension");
  }

  int num_speakers = 0;
  for (int label : init_labels) {
    if (label < 0) throw ContractError("vbx: negative init label");
    num_speakers = std::max(num_speakers, label + 1);
  }
  num_speakers = std::max(num_speakers, 1);

  // Responsibilities start as the hard initial assignment.
  Tensor gamma({t_frames, num_speakers});
  for (int t = 0; t < t_frames; ++t) gamma.at(t, init_labels[t]) = 1.0;

  std::vector<double> pi(num_speakers, 1.0 / num_speakers);
  std::vector<double> sqrt_psi(r);
  for (int d = 0; d < r; ++d) sqrt_psi[d] = std::sqrt(std::max(psi[d], 0.0));

  std::vector<double> xsq(t_frames, 0.0);
  for (int t = 0; t < t_frames; ++t) {
    const double *x = projected.data() + static_cast<size_t>(t) * r;
    for (int d = 0; d < r; ++d) xsq[t] += x[d] * x[d];
  }

  const double ratio = cfg.fa / cfg.fb;
  const double log_ploop = std::log(cfg.ploop);
  const double log_jump = std::log(1.0 - cfg.ploop);

  double prev_elbo = kNegInf;
  bool speaker_set_changed = true;  // first iteration has no previous ELBO

  Tensor alpha_mean, alpha_var;  // S x R posterior stats of q(y)
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const int s_count = num_speakers;

    // (a) q(y_s) = N(alpha_s, diag(V_s)) from current responsibilities.
    std::vector<double> occupancy(s_count, 0.0);
    Tensor weighted_sum({s_count, r});
    for (int t = 0; t < t_frames; ++t) {
      const double *x = projected.data() + static_cast<size_t>(t) * r;
      const double *g = gamma.data() + static_cast<size_t>(t) * s_count;
      for (int s = 0; s < s_count; ++s) {
        const double w = g[s];
        if (w == 0.0) continue;
        occupancy[s] += w;
        double *ws = weighted_sum.data() + static_cast<size_t>(s) * r;
        for (int d = 0; d < r; ++d) ws[d] += w * x[d];
      }
    }
    alpha_mean = Tensor({s_count, r});
    alpha_var = Tensor({s_count, r});
    for (int s = 0; s < s_count; ++s) {
      for (int d = 0; d < r; ++d) {
        const double precision = 1.0 + ratio * occupancy[s] * psi[d];
        const double variance = 1.0 / precision;
        alpha_var.at(s, d) = variance;
        alpha_mean.at(s, d) =
            ratio * variance * sqrt_psi[d] * weighted_sum.at(s, d);
      }
    }

    // (b) scaled expected emission log-likelihoods.
    // log p~_ts = fa * (const - xsq_t / 2 + x_t . rho_s - k_s / 2)
    Tensor rho({s_count, r});
    std::vector<double> k_s(s_count, 0.0);
    for (int s = 0; s < s_count; ++s) {
      for (int d = 0; d < r; ++d) {
        rho.at(s, d) = sqrt_psi[d] * alpha_mean.at(s, d);
        k_s[s] += psi[d] * (alpha_mean.at(s, d) * alpha_mean.at(s, d) +
                            alpha_var.at(s, d));
      }
    }
    const double log_norm = -0.5 * r * std::log(2.0 * M_PI);
    Tensor log_emit({t_frames, s_count});
    for (int t = 0; t < t_frames; ++t) {
      const double *x = projected.data() + static_cast<size_t>(t) * r;
      for (int s = 0; s < s_count; ++s) {
        const double *rs = rho.data() + static_cast<size_t>(s) * r;
        double dot = 0.0;
        for (int d = 0; d < r; ++d) dot += x[d] * rs[d];
        log_emit.at(t, s) =
            cfg.fa * (log_norm - 0.5 * xsq[t] + dot - 0.5 * k_s[s]);
      }
    }

    // Log-domain forward-backward with the loop-or-draw transition
    // structure, O(T*S).
    std::vector<double> log_pi(s_count);
    for (int s = 0; s < s_count; ++s) {
      log_pi[s] = pi[s] > 0.0 ? std::log(pi[s]) : kNegInf;
    }
    Tensor log_alpha({t_frames, s_count}), log_beta({t_frames, s_count});
    std::vector<double> alpha_total(t_frames);  // logsumexp of alpha rows
    for (int s = 0; s < s_count; ++s) {
      log_alpha.at(0, s) = log_pi[s] + log_emit.at(0, s);
    }
    alpha_total[0] = LogSumExp(log_alpha.data(), s_count);
    for (int t = 1; t < t_frames; ++t) {
      const double prev_total = alpha_total[t - 1];
      for (int s = 0; s < s_count; ++s) {
        const double stay = log_ploop + log_alpha.at(t - 1, s);
        const double draw = log_jump + log_pi[s] + prev_total;
        log_alpha.at(t, s) = log_emit.at(t, s) + LogAddExp(stay, draw);
      }
      alpha_total[t] =
          LogSumExp(log_alpha.data() + static_cast<size_t>(t) * s_count,
                    s_count);
    }
    const double log_z = alpha_total[t_frames - 1];

    for (int s = 0; s < s_count; ++s) log_beta.at(t_frames - 1, s) = 0.0;
    std::vector<double> tmp(s_count);
    for (int t = t_frames - 2; t >= 0; --t) {
      for (int s = 0; s < s_count; ++s) {
        tmp[s] = log_pi[s] + log_emit.at(t + 1, s) + log_beta.at(t + 1, s);
      }
      const double draw_all = LogSumExp(tmp.data(), s_count);
      for (int s = 0; s < s_count; ++s) {
        const double stay =
            log_ploop + log_emit.at(t + 1, s) + log_beta.at(t + 1, s);
        log_beta.at(t, s) = LogAddExp(stay, log_jump + draw_all);
      }
    }

    gamma = Tensor({t_frames, s_count});
    for (int t = 0; t < t_frames; ++t) {
      double row_sum = 0.0;
      for (int s = 0; s < s_count; ++s) {
        const double g =
            std::exp(log_alpha.at(t, s) + log_beta.at(t, s) - log_z);
        gamma.at(t, s) = g;
        row_sum += g;
      }
      for (int s = 0; s < s_count; ++s) gamma.at(t, s) /= row_sum;
    }

    // Expected "drawn from pi" counts: the t = 0 state plus, for t >= 1,
    // the non-loop component of the incoming transition mass.
    std::vector<double> draw_counts(s_count, 0.0);
    for (int s = 0; s < s_count; ++s) draw_counts[s] += gamma.at(0, s);
    for (int t = 1; t < t_frames; ++t) {
      for (int s = 0; s < s_count; ++s) {
        if (log_pi[s] == kNegInf) continue;
        draw_counts[s] += std::exp(log_jump + log_pi[s] + alpha_total[t - 1] +
                                   log_emit.at(t, s) + log_beta.at(t, s) -
                                   log_z);
      }
    }

    // (d) ELBO = log Z - sum_s KL(q(y_s) || N(0, I)).
    double kl = 0.0;
    for (int s = 0; s < s_count; ++s) {
      for (int d = 0; d < r; ++d) {
        const double v = alpha_var.at(s, d);
        const double m = alpha_mean.at(s, d);
        kl += 0.5 * (v + m * m - 1.0 - std::log(v));
      }
    }
    const double elbo = log_z - kl;
    result.elbo_trace.push_back(elbo);

    const bool converged = !speaker_set_changed &&
                           std::fabs(elbo - prev_elbo) < cfg.elbo_tol;
    prev_elbo = elbo;
    speaker_set_changed = false;

    // (c) pi from expected draw counts.
    double draw_total = 0.0;
    for (double v : draw_counts) draw_total += v;
    if (draw_total > 0.0) {
      for (int s = 0; s < s_count; ++s) pi[s] = draw_counts[s] / draw_total;
    }

    // Drop speakers whose responsibility mass fell below the floor.
    if (cfg.min_speaker_mass > 0.0 && s_count > 1) {
      std::vector<double> mass(s_count, 0.0);
      for (int t = 0; t < t_frames; ++t) {
        for (int s = 0; s < s_count; ++s) mass[s] += gamma.at(t, s);
      }
      std::vector<int> keep;
      for (int s = 0; s < s_count; ++s) {
        if (mass[s] >= cfg.min_speaker_mass) keep.push_back(s);
      }
      if (keep.empty()) {
        keep.push_back(static_cast<int>(
            std::max_element(mass.begin(), mass.end()) - mass.begin()));
      }
      if (static_cast<int>(keep.size()) < s_count) {
        Tensor new_gamma({t_frames, static_cast<int>(keep.size())});
        for (int t = 0; t < t_frames; ++t) {
          double row_sum = 0.0;
          for (size_t j = 0; j < keep.size(); ++j) {
            new_gamma.at(t, static_cast<int>(j)) = gamma.at(t, keep[j]);
            row_sum += new_gamma.at(t, static_cast<int>(j));
          }
          if (row_sum > 0.0) {
            for (size_t j = 0; j < keep.size(); ++j) {
              new_gamma.at(t, static_cast<int>(j)) /= row_sum;
            }
          }
        }
        std::vector<double> new_pi;
        double pi_sum = 0.0;
        for (int s : keep) pi_sum += pi[s];
        for (int s : keep) new_pi.push_back(pi[s] / pi_sum);
        gamma = std::move(new_gamma);
        pi = std::move(new_pi);
        num_speakers = static_cast<int>(keep.size());
        speaker_set_changed = true;
      }
    }

    if (converged) break;
  }

  result.gamma = gamma;
  result.hard_labels.resize(t_frames);
  for (int t = 0; t < t_frames; ++t) {
    int arg = 0;
    for (int s = 1; s < gamma.cols(); ++s) {
      if (gamma.at(t, s) > gamma.at(t, arg)) arg = s;
    }
    result.hard_labels[t] = arg;
  }
  return result;
}

GridSearchResult GridSearchHyperparams(
    const VBxConfig &base, const std::vector<double> &fa_grid,
    const std::vector<double> &fb_grid, const std::vector<double> &ploop_grid,
    const std::vector<double> &tau_grid, int num_recordings,
    const std::function<DERBreakdown(int, const VBxConfig &)> &score) {
  if (fa_grid.empty() || fb_grid.empty() || ploop_grid.empty() ||
      tau_grid.empty()) {
    throw ConfigError("grid search: empty grid");
  }
  if (num_recordings < 1) {
    throw ConfigError("grid search: need at least one dev recording");
  }

  GridSearchResult result;
  std::map<std::pair<int, int>, DERBreakdown> cache;
  bool have_best = false;
  int config_index = 0;
  for (double fa : fa_grid) {
    for (double fb : fb_grid) {
      for (double ploop : ploop_grid) {
        for (double tau : tau_grid) {
          VBxConfig cfg = base;
          cfg.fa = fa;
          cfg.fb = fb;
          cfg.ploop = ploop;
          cfg.ahc_threshold = tau;
          cfg.Validate();

          double err_s = 0.0, ref_s = 0.0;
          for (int rec = 0; rec < num_recordings; ++rec) {
            auto key = std::make_pair(rec, config_index);
            auto it = cache.find(key);
            if (it == cache.end()) {
              it = cache.emplace(key, score(rec, cfg)).first;
            }
            const DERBreakdown &der = it->second;
            err_s += der.der_pct / 100.0 * der.ref_speech_s;
            ref_s += der.ref_speech_s;
          }
          const double der_pct = ref_s > 0.0 ? 100.0 * err_s / ref_s : 0.0;
          result.evaluated.push_back({cfg, der_pct});

          const auto better = [&]() {
            if (!have_best) return true;
            if (der_pct != result.best_der_pct) {
              return der_pct < result.best_der_pct;
            }
            if (cfg.ploop != result.best.ploop) {
              return cfg.ploop < result.best.ploop;
            }
            if (cfg.fa != result.best.fa) return cfg.fa < result.best.fa;
            if (cfg.fb != result.best.fb) return cfg.fb < result.best.fb;
            return cfg.ahc_threshold < result.best.ahc_threshold;
          };
          if (better()) {
            have_best = true;
            result.best = cfg;
            result.best_der_pct = der_pct;
          }
          ++config_index;
        }
      }
    }
  }
  return result;
}

}  // namespace jdiar
