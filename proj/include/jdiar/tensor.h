// include/jdiar/tensor.h

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

#ifndef JDIAR_TENSOR_H_
#define JDIAR_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "jdiar/common.h"

namespace jdiar {

// Dense row-major tensor of doubles. Everything numeric in the project is
// 64-bit; archives convert to float32 only at the file boundary.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(NumElementsOf(shape_), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != NumElementsOf(shape_)) {
      throw DimensionError("tensor data size does not match shape");
    }
  }

  static Tensor Scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<int> &shape() const { return shape_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D accessors; rank-1 tensors behave as a single row.
  int rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
  int cols() const {
    if (shape_.empty()) return 0;
    return shape_.size() >= 2 ? shape_[1] : shape_[0];
  }

  double &at(int r, int c) { return data_[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols() + c];
  }
  double &operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::vector<double> &values() { return data_; }
  const std::vector<double> &values() const { return data_; }

  bool SameShape(const Tensor &other) const { return shape_ == other.shape_; }
  bool IsScalar() const { return data_.size() == 1; }

  bool AllFinite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string ShapeString() const;

  static size_t NumElementsOf(const std::vector<int> &shape) {
    size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw DimensionError("negative tensor dimension");
      n *= static_cast<size_t>(d);
    }
    return shape.empty() ? 0 : n;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// Plain (non-differentiated) kernels. The autodiff tape uses these same
// functions for its forward pass, so inference-path and training-path
// activations are bit-identical.

// c = a * b, or a * b^T when transpose_b is set.
Tensor MatMul(const Tensor &a, const Tensor &b, bool transpose_b = false);

// Same-shape elementwise sum, or row-broadcast when b is a vector whose
// length equals a's column count (bias add).
Tensor Add(const Tensor &a, const Tensor &b);

Tensor Scale(const Tensor &a, double c);
Tensor Relu(const Tensor &a);

// Logistic with outputs clamped to [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-7;
Tensor Sigmoid(const Tensor &a);

Tensor Log(const Tensor &a);

// Row-wise exp-normalize with max subtraction.
Tensor Softmax(const Tensor &a);

// T x D -> 1 x D column means.
Tensor MeanOverTime(const Tensor &a);

// T x D -> 1 x D column standard deviations, population convention,
// sqrt(var + kStdEpsilon) so the value (and gradient) stay finite on
// constant input.
inline constexpr double kStdEpsilon = 1e-10;
Tensor StdOverTime(const Tensor &a);

// Rows scaled to unit Euclidean norm. Zero rows raise NumericalError.
Tensor LengthNormalize(const Tensor &a);

// axis 0 stacks rows, axis 1 concatenates columns.
Tensor Concatenate(const Tensor &a, const Tensor &b, int axis);

// Output frame i stacks input rows 8i-k .. 8i+k (for stride 8), with
// first/last row replication at the edges; T' = floor(T / stride).
Tensor FrameStack(const Tensor &a, int context, int stride);

// Scalar sum of a .* mask; mask is a constant, so this doubles as
// "elementwise weight then reduce".
Tensor MaskedSum(const Tensor &a, const Tensor &mask);

}  // namespace jdiar

#endif  // JDIAR_TENSOR_H_
