// src/tensor.cc

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

#include "jdiar/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jdiar {

std::string Tensor::ShapeString() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

static void ThrowShape(const char *op, const Tensor &a, const Tensor &b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       a.ShapeString() + " and " + b.ShapeString());
}

Tensor MatMul(const Tensor &a, const Tensor &b, bool transpose_b) {
  const int m = a.rows(), k = a.cols();
  const int bk = transpose_b ? b.cols() : b.rows();
  const int n = transpose_b ? b.rows() : b.cols();
  if (k != bk) ThrowShape("matmul", a, b);
  Tensor out({m, n});
  if (!transpose_b) {
    // i-k-j order keeps the inner loop contiguous in both b and out.
    for (int i = 0; i < m; ++i) {
      double *orow = out.data() + static_cast<size_t>(i) * n;
      const double *arow = a.data() + static_cast<size_t>(i) * k;
      for (int kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        const double *brow = b.data() + static_cast<size_t>(kk) * n;
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  } else {
    for (int i = 0; i < m; ++i) {
      const double *arow = a.data() + static_cast<size_t>(i) * k;
      double *orow = out.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double *brow = b.data() + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
        orow[j] = acc;
      }
    }
  }
  return out;
}

Tensor Add(const Tensor &a, const Tensor &b) {
  if (a.SameShape(b)) {
    Tensor out = a;
    for (size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
  }
  // Bias add: b broadcast over the rows of a.
  if (static_cast<int>(b.size()) == a.cols()) {
    Tensor out = a;
    const int n = a.cols();
    for (int i = 0; i < a.rows(); ++i) {
      double *row = out.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) row[j] += b[j];
    }
    return out;
  }
  ThrowShape("add", a, b);
  return Tensor();
}

Tensor Scale(const Tensor &a, double c) {
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return out;
}

Tensor Relu(const Tensor &a) {
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  return out;
}

Tensor Sigmoid(const Tensor &a) {
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) {
    double x = out[i];
    double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
    out[i] = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  }
  return out;
}

Tensor Log(const Tensor &a) {
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i] <= 0.0) throw NumericalError("log of non-positive value");
    out[i] = std::log(out[i]);
  }
  return out;
}

Tensor Softmax(const Tensor &a) {
  Tensor out = a;
  const int n = a.cols();
  for (int i = 0; i < a.rows(); ++i) {
    double *row = out.data() + static_cast<size_t>(i) * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < n; ++j) row[j] /= sum;
  }
  return out;
}

Tensor MeanOverTime(const Tensor &a) {
  const int t = a.rows(), d = a.cols();
  if (t == 0) throw ContractError("mean-over-time of empty input");
  Tensor out({1, d});
  for (int i = 0; i < t; ++i) {
    const double *row = a.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) out[j] += row[j];
  }
  for (int j = 0; j < d; ++j) out[j] /= t;
  return out;
}

Tensor StdOverTime(const Tensor &a) {
  const int t = a.rows(), d = a.cols();
  if (t == 0) throw ContractError("std-over-time of empty input");
  Tensor mean = MeanOverTime(a);
  Tensor out({1, d});
  for (int i = 0; i < t; ++i) {
    const double *row = a.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      double dv = row[j] - mean[j];
      out[j] += dv * dv;
    }
  }
  for (int j = 0; j < d; ++j) out[j] = std::sqrt(out[j] / t + kStdEpsilon);
  return out;
}

Tensor LengthNormalize(const Tensor &a) {
  const int n = a.cols();
  Tensor out = a;
  for (int i = 0; i < a.rows(); ++i) {
    double *row = out.data() + static_cast<size_t>(i) * n;
    double norm2 = 0.0;
    for (int j = 0; j < n; ++j) norm2 += row[j] * row[j];
    double norm = std::sqrt(norm2);
    if (norm < 1e-300) throw NumericalError("length-normalize of zero vector");
    for (int j = 0; j < n; ++j) row[j] /= norm;
  }
  return out;
}

Tensor Concatenate(const Tensor &a, const Tensor &b, int axis) {
  if (axis == 0) {
    if (a.cols() != b.cols()) ThrowShape("concatenate", a, b);
    Tensor out({a.rows() + b.rows(), a.cols()});
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
  }
  if (axis == 1) {
    if (a.rows() != b.rows()) ThrowShape("concatenate", a, b);
    const int da = a.cols(), db = b.cols();
    Tensor out({a.rows(), da + db});
    for (int i = 0; i < a.rows(); ++i) {
      std::copy(a.data() + static_cast<size_t>(i) * da,
                a.data() + static_cast<size_t>(i + 1) * da,
                out.data() + static_cast<size_t>(i) * (da + db));
      std::copy(b.data() + static_cast<size_t>(i) * db,
                b.data() + static_cast<size_t>(i + 1) * db,
                out.data() + static_cast<size_t>(i) * (da + db) + da);
    }
    return out;
  }
  throw ContractError("concatenate: axis must be 0 or 1");
}

Tensor FrameStack(const Tensor &a, int context, int stride) {
  if (context < 0 || stride < 1) {
    throw ContractError("frame-stack: context must be >= 0 and stride >= 1");
  }
  const int t = a.rows(), d = a.cols();
  const int t_out = t / stride;
  const int width = 2 * context + 1;
  Tensor out({t_out, width * d});
  for (int i = 0; i < t_out; ++i) {
    const int center = i * stride;
    double *orow = out.data() + static_cast<size_t>(i) * width * d;
    for (int c = -context; c <= context; ++c) {
      int src = std::clamp(center + c, 0, t - 1);
      const double *srow = a.data() + static_cast<size_t>(src) * d;
      std::copy(srow, srow + d, orow + static_cast<size_t>(c + context) * d);
    }
  }
  return out;
}

Tensor MaskedSum(const Tensor &a, const Tensor &mask) {
  if (a.size() != mask.size()) ThrowShape("masked-sum", a, mask);
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * mask[i];
  return Tensor::Scalar(acc);
}

}  // namespace jdiar
