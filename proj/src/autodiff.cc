// src/autodiff.cc

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

#include "jdiar/autodiff.h"

#include <algorithm>
#include <cmath>
#include <memory>

namespace jdiar {

Tensor &ParameterSet::Create(const std::string &name, Tensor init) {
  if (Has(name)) throw ContractError("parameter already exists: " + name);
  index_[name] = entries_.size();
  entries_.push_back(Entry{name, std::move(init), Tensor()});
  Entry &e = entries_.back();
  e.grad = Tensor(e.value.shape());
  return e.value;
}

Tensor &ParameterSet::Value(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no such parameter: " + name);
  return entries_[it->second].value;
}

const Tensor &ParameterSet::Value(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no such parameter: " + name);
  return entries_[it->second].value;
}

Tensor &ParameterSet::Grad(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no such parameter: " + name);
  return entries_[it->second].grad;
}

void ParameterSet::ZeroGrads() {
  for (auto &e : entries_) {
    std::fill(e.grad.values().begin(), e.grad.values().end(), 0.0);
  }
}

size_t ParameterSet::TotalCoords() const {
  size_t n = 0;
  for (const auto &e : entries_) n += e.value.size();
  return n;
}

void Tape::CheckFiniteValue(const Tensor &t, const char *op) const {
  if (!t.AllFinite()) {
    throw NumericalError(std::string("non-finite output of primitive ") + op);
  }
}

Var Tape::Emit(Tensor value, std::vector<int> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Constant(Tensor value) {
  return Emit(std::move(value), {}, BackwardFn());
}

Var Tape::Param(const std::string &name) {
  if (params_ == nullptr) {
    throw ContractError("tape has no parameter set attached");
  }
  Var v = Emit(params_->Value(name), {}, BackwardFn());
  nodes_[v.id].param_name = name;
  return v;
}

Var Tape::MatMul(Var a, Var b, bool transpose_b) {
  Tensor out = jdiar::MatMul(value(a), value(b), transpose_b);
  CheckFiniteValue(out, "matmul");
  return Emit(std::move(out), {a.id, b.id},
              [transpose_b](const Tensor &, const Tensor &dout,
                            const std::vector<const Tensor *> &in,
                            const std::vector<Tensor *> &din) {
                const Tensor &av = *in[0], &bv = *in[1];
                const int m = av.rows(), k = av.cols();
                const int n = transpose_b ? bv.rows() : bv.cols();
                // dA = dC * B^T (or dC * B when B was transposed).
                {
                  Tensor da = jdiar::MatMul(dout, bv, !transpose_b);
                  double *dst = din[0]->data();
                  for (size_t i = 0; i < da.size(); ++i) dst[i] += da[i];
                }
                if (!transpose_b) {
                  // dB = A^T * dC
                  double *db = din[1]->data();
                  for (int i = 0; i < m; ++i) {
                    const double *arow = av.data() + static_cast<size_t>(i) * k;
                    const double *drow =
                        dout.data() + static_cast<size_t>(i) * n;
                    for (int kk = 0; kk < k; ++kk) {
                      const double w = arow[kk];
                      if (w == 0.0) continue;
                      double *dbrow = db + static_cast<size_t>(kk) * n;
                      for (int j = 0; j < n; ++j) dbrow[j] += w * drow[j];
                    }
                  }
                } else {
                  // C = A * B^T: dB = dC^T * A
                  double *db = din[1]->data();
                  for (int i = 0; i < m; ++i) {
                    const double *arow = av.data() + static_cast<size_t>(i) * k;
                    const double *drow =
                        dout.data() + static_cast<size_t>(i) * n;
                    for (int j = 0; j < n; ++j) {
                      const double w = drow[j];
                      if (w == 0.0) continue;
                      double *dbrow = db + static_cast<size_t>(j) * k;
                      for (int kk = 0; kk < k; ++kk) dbrow[kk] += w * arow[kk];
                    }
                  }
                }
              });
}

Var Tape::Add(Var a, Var b) {
  Tensor out = jdiar::Add(value(a), value(b));
  CheckFiniteValue(out, "add");
  const bool bias = !value(a).SameShape(value(b));
  return Emit(std::move(out), {a.id, b.id},
              [bias](const Tensor &, const Tensor &dout,
                     const std::vector<const Tensor *> &in,
                     const std::vector<Tensor *> &din) {
                double *da = din[0]->data();
                for (size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
                if (!bias) {
                  double *db = din[1]->data();
                  for (size_t i = 0; i < dout.size(); ++i) db[i] += dout[i];
                } else {
                  const int n = in[0]->cols();
                  double *db = din[1]->data();
                  for (int i = 0; i < in[0]->rows(); ++i) {
                    const double *drow =
                        dout.data() + static_cast<size_t>(i) * n;
                    for (int j = 0; j < n; ++j) db[j] += drow[j];
                  }
                }
              });
}

Var Tape::Scale(Var a, double c) {
  Tensor out = jdiar::Scale(value(a), c);
  CheckFiniteValue(out, "scale");
  return Emit(std::move(out), {a.id},
              [c](const Tensor &, const Tensor &dout,
                  const std::vector<const Tensor *> &,
                  const std::vector<Tensor *> &din) {
                double *da = din[0]->data();
                for (size_t i = 0; i < dout.size(); ++i) da[i] += c * dout[i];
              });
}

Var Tape::Relu(Var a) {
  Tensor out = jdiar::Relu(value(a));
  return Emit(std::move(out), {a.id},
              [](const Tensor &, const Tensor &dout,
                 const std::vector<const Tensor *> &in,
                 const std::vector<Tensor *> &din) {
                const Tensor &x = *in[0];
                double *da = din[0]->data();
                for (size_t i = 0; i < dout.size(); ++i) {
                  if (x[i] > 0.0) da[i] += dout[i];
                }
              });
}

Var Tape::Sigmoid(Var a) {
  Tensor out = jdiar::Sigmoid(value(a));
  return Emit(std::move(out), {a.id},
              [](const Tensor &y, const Tensor &dout,
                 const std::vector<const Tensor *> &,
                 const std::vector<Tensor *> &din) {
                double *da = din[0]->data();
                for (size_t i = 0; i < dout.size(); ++i) {
                  // Clamped outputs are locally constant.
                  if (y[i] <= kProbFloor || y[i] >= 1.0 - kProbFloor) continue;
                  da[i] += dout[i] * y[i] * (1.0 - y[i]);
                }
              });
}

Var Tape::Log(Var a) {
  Tensor out = jdiar::Log(value(a));
  CheckFiniteValue(out, "log");
  return Emit(std::move(out), {a.id},
              [](const Tensor &, const Tensor &dout,
                 const std::vector<const Tensor *> &in,
                 const std::vector<Tensor *> &din) {
                const Tensor &x = *in[0];
                double *da = din[0]->data();
                for (size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] / x[i];
              });
}

Var Tape::Softmax(Var a) {
  Tensor out = jdiar::Softmax(value(a));
  return Emit(std::move(out), {a.id},
              [](const Tensor &y, const Tensor &dout,
                 const std::vector<const Tensor *> &,
                 const std::vector<Tensor *> &din) {
                const int n = y.cols();
                double *da = din[0]->data();
                for (int i = 0; i < y.rows(); ++i) {
                  const double *yrow = y.data() + static_cast<size_t>(i) * n;
                  const double *drow = dout.data() + static_cast<size_t>(i) * n;
                  double dot = 0.0;
                  for (int j = 0; j < n; ++j) dot += yrow[j] * drow[j];
                  double *darow = da + static_cast<size_t>(i) * n;
                  for (int j = 0; j < n; ++j) {
                    darow[j] += yrow[j] * (drow[j] - dot);
                  }
                }
              });
}

Var Tape::MeanOverTime(Var a) {
  Tensor out = jdiar::MeanOverTime(value(a));
  return Emit(std::move(out), {a.id},
              [](const Tensor &, const Tensor &dout,
                 const std::vector<const Tensor *> &in,
                 const std::vector<Tensor *> &din) {
                const int t = in[0]->rows(), d = in[0]->cols();
                double *da = din[0]->data();
                for (int i = 0; i < t; ++i) {
                  for (int j = 0; j < d; ++j) {
                    da[static_cast<size_t>(i) * d + j] += dout[j] / t;
                  }
                }
              });
}

Var Tape::StdOverTime(Var a) {
  Tensor out = jdiar::StdOverTime(value(a));
  return Emit(std::move(out), {a.id},
              [](const Tensor &y, const Tensor &dout,
                 const std::vector<const Tensor *> &in,
                 const std::vector<Tensor *> &din) {
                const Tensor &x = *in[0];
                const int t = x.rows(), d = x.cols();
                Tensor mean = jdiar::MeanOverTime(x);
                double *da = din[0]->data();
                for (int i = 0; i < t; ++i) {
                  const double *xrow = x.data() + static_cast<size_t>(i) * d;
                  double *darow = da + static_cast<size_t>(i) * d;
                  for (int j = 0; j < d; ++j) {
                    darow[j] += dout[j] * (xrow[j] - mean[j]) / (t * y[j]);
                  }
                }
              });
}

Var Tape::LengthNormalize(Var a) {
  Tensor out = jdiar::LengthNormalize(value(a));
  return Emit(std::move(out), {a.id},
              [](const Tensor &y, const Tensor &dout,
                 const std::vector<const Tensor *> &in,
                 const std::vector<Tensor *> &din) {
                const Tensor &x = *in[0];
                const int n = x.cols();
                double *da = din[0]->data();
                for (int i = 0; i < x.rows(); ++i) {
                  const double *xrow = x.data() + static_cast<size_t>(i) * n;
                  const double *yrow = y.data() + static_cast<size_t>(i) * n;
                  const double *drow = dout.data() + static_cast<size_t>(i) * n;
                  double norm = 0.0;
                  for (int j = 0; j < n; ++j) norm += xrow[j] * xrow[j];
                  norm = std::sqrt(norm);
                  double dot = 0.0;
                  for (int j = 0; j < n; ++j) dot += yrow[j] * drow[j];
                  double *darow = da + static_cast<size_t>(i) * n;
                  for (int j = 0; j < n; ++j) {
                    darow[j] += (drow[j] - yrow[j] * dot) / norm;
                  }
                }
              });
}

Var Tape::Concatenate(Var a, Var b, int axis) {
  Tensor out = jdiar::Concatenate(value(a), value(b), axis);
  return Emit(std::move(out), {a.id, b.id},
              [axis](const Tensor &, const Tensor &dout,
                     const std::vector<const Tensor *> &in,
                     const std::vector<Tensor *> &din) {
                if (axis == 0) {
                  double *da = din[0]->data();
                  double *db = din[1]->data();
                  const size_t na = in[0]->size();
                  for (size_t i = 0; i < na; ++i) da[i] += dout[i];
                  for (size_t i = 0; i < in[1]->size(); ++i) {
                    db[i] += dout[na + i];
                  }
                } else {
                  const int rows = in[0]->rows();
                  const int ca = in[0]->cols(), cb = in[1]->cols();
                  double *da = din[0]->data();
                  double *db = din[1]->data();
                  for (int i = 0; i < rows; ++i) {
                    const double *drow =
                        dout.data() + static_cast<size_t>(i) * (ca + cb);
                    for (int j = 0; j < ca; ++j) {
                      da[static_cast<size_t>(i) * ca + j] += drow[j];
                    }
                    for (int j = 0; j < cb; ++j) {
                      db[static_cast<size_t>(i) * cb + j] += drow[ca + j];
                    }
                  }
                }
              });
}

Var Tape::FrameStack(Var a, int context, int stride) {
  Tensor out = jdiar::FrameStack(value(a), context, stride);
  return Emit(std::move(out), {a.id},
              [context, stride](const Tensor &, const Tensor &dout,
                                const std::vector<const Tensor *> &in,
                                const std::vector<Tensor *> &din) {
                const int t = in[0]->rows(), d = in[0]->cols();
                const int t_out = t / stride;
                const int width = 2 * context + 1;
                double *da = din[0]->data();
                for (int i = 0; i < t_out; ++i) {
                  const int center = i * stride;
                  const double *drow =
                      dout.data() + static_cast<size_t>(i) * width * d;
                  for (int c = -context; c <= context; ++c) {
                    int src = std::clamp(center + c, 0, t - 1);
                    double *darow = da + static_cast<size_t>(src) * d;
                    const double *dsrc =
                        drow + static_cast<size_t>(c + context) * d;
                    for (int j = 0; j < d; ++j) darow[j] += dsrc[j];
                  }
                }
              });
}

Var Tape::MaskedSum(Var a, Tensor mask) {
  Tensor out = jdiar::MaskedSum(value(a), mask);
  CheckFiniteValue(out, "masked-sum");
  auto mask_copy = std::make_shared<Tensor>(std::move(mask));
  return Emit(std::move(out), {a.id},
              [mask_copy](const Tensor &, const Tensor &dout,
                          const std::vector<const Tensor *> &,
                          const std::vector<Tensor *> &din) {
                double *da = din[0]->data();
                const Tensor &m = *mask_copy;
                for (size_t i = 0; i < m.size(); ++i) da[i] += m[i] * dout[0];
              });
}

Var Tape::Custom(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (Var v : inputs) ids.push_back(v.id);
  CheckFiniteValue(value, "custom");
  return Emit(std::move(value), std::move(ids), std::move(backward));
}

void Tape::Backward(Var loss) {
  if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size())) {
    throw ContractError("backward: invalid loss node");
  }
  if (!nodes_[loss.id].value.IsScalar()) {
    throw ContractError("backward: loss node is not scalar");
  }
  for (auto &node : nodes_) {
    node.grad = Tensor(node.value.shape());
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node &node = nodes_[i];
    if (!node.backward) continue;
    std::vector<const Tensor *> in;
    std::vector<Tensor *> din;
    in.reserve(node.inputs.size());
    din.reserve(node.inputs.size());
    for (int id : node.inputs) {
      in.push_back(&nodes_[id].value);
      din.push_back(&nodes_[id].grad);
    }
    node.backward(node.value, node.grad, in, din);
  }
  if (params_ != nullptr) {
    for (const auto &node : nodes_) {
      if (node.param_name.empty()) continue;
      Tensor &g = params_->Grad(node.param_name);
      for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    }
  }
}

double GradCheck(const std::function<double()> &loss_fn, ParameterSet &params,
                 double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 1e-3) {
    throw ContractError("grad_check: epsilon must be in (0, 1e-3]");
  }
  params.ZeroGrads();
  double base = loss_fn();
  if (!std::isfinite(base)) {
    throw NumericalError("grad_check: non-finite loss value");
  }
  // Snapshot analytic gradients before the perturbation runs overwrite them.
  std::vector<Tensor> analytic;
  for (const auto &e : params.entries()) analytic.push_back(e.grad);

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.entries().size(); ++pi) {
    Tensor &value = params.entries()[pi].value;
    for (size_t ci = 0; ci < value.size(); ++ci) {
      const double saved = value[ci];
      value[ci] = saved + epsilon;
      double fp = loss_fn();
      value[ci] = saved - epsilon;
      double fm = loss_fn();
      value[ci] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericalError("grad_check: non-finite loss at perturbed point");
      }
      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double a = analytic[pi][ci];
      const double denom =
          std::max(1.0, std::max(std::fabs(a), std::fabs(numeric)));
      max_err = std::max(max_err, std::fabs(a - numeric) / denom);
    }
  }
  params.ZeroGrads();
  return max_err;
}

void SgdOptimizer::Step(ParameterSet &params) {
  double clip_scale = 1.0;
  if (max_grad_norm_ > 0.0) {
    double norm2 = 0.0;
    for (const auto &e : params.entries()) {
      for (size_t i = 0; i < e.grad.size(); ++i) norm2 += e.grad[i] * e.grad[i];
    }
    const double norm = std::sqrt(norm2);
    if (norm > max_grad_norm_) clip_scale = max_grad_norm_ / norm;
  }
  for (auto &e : params.entries()) {
    auto it = velocity_.find(e.name);
    if (it == velocity_.end()) {
      it = velocity_.emplace(e.name, Tensor(e.value.shape())).first;
    }
    Tensor &v = it->second;
    for (size_t i = 0; i < e.value.size(); ++i) {
      const double g = clip_scale * e.grad[i] + weight_decay_ * e.value[i];
      v[i] = momentum_ * v[i] - learning_rate_ * g;
      e.value[i] += v[i];
      if (!std::isfinite(e.value[i])) {
        throw NumericalError("sgd: parameter became non-finite: " + e.name);
      }
    }
  }
  params.ZeroGrads();
}

}  // namespace jdiar
