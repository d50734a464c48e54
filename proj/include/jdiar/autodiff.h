// include/jdiar/autodiff.h

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

#ifndef JDIAR_AUTODIFF_H_
#define JDIAR_AUTODIFF_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jdiar/tensor.h"

namespace jdiar {

// Named trainable tensors with accumulated gradients. Entry order is
// insertion order, so iteration is deterministic.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  Tensor &Create(const std::string &name, Tensor init);
  bool Has(const std::string &name) const { return index_.count(name) > 0; }
  Tensor &Value(const std::string &name);
  const Tensor &Value(const std::string &name) const;
  Tensor &Grad(const std::string &name);

  const std::vector<Entry> &entries() const { return entries_; }
  std::vector<Entry> &entries() { return entries_; }

  void ZeroGrads();
  size_t TotalCoords() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, size_t> index_;
};

// Handle into a tape.
struct Var {
  int id = -1;
};

// Reverse-mode tape over dense tensors. Single-owner, single-threaded
// during forward and backward; distinct tapes over shared read-only
// parameters may run concurrently.
class Tape {
 public:
  using BackwardFn = std::function<void(
      const Tensor &out, const Tensor &dout,
      const std::vector<const Tensor *> &inputs,
      const std::vector<Tensor *> &dinputs)>;

  explicit Tape(ParameterSet *params = nullptr) : params_(params) {}

  Var Constant(Tensor value);
  // Leaf bound to a ParameterSet entry; Backward accumulates into its grad.
  Var Param(const std::string &name);

  const Tensor &value(Var v) const { return nodes_[v.id].value; }
  const Tensor &grad(Var v) const { return nodes_[v.id].grad; }

  Var MatMul(Var a, Var b, bool transpose_b = false);
  Var Add(Var a, Var b);
  Var Scale(Var a, double c);
  Var Relu(Var a);
  Var Sigmoid(Var a);
  Var Log(Var a);
  Var Softmax(Var a);
  Var MeanOverTime(Var a);
  Var StdOverTime(Var a);
  Var LengthNormalize(Var a);
  Var Concatenate(Var a, Var b, int axis);
  Var FrameStack(Var a, int context, int stride);
  Var MaskedSum(Var a, Tensor mask);

  // Extension point for composite differentiable ops (e.g. the angular
  // margin transform in the losses module). The backward function adds
  // into dinputs.
  Var Custom(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Exact reverse-mode gradients of a scalar node with respect to every
  // parameter leaf on this tape; parameters not contributing get zero.
  void Backward(Var loss);

  size_t NumNodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    BackwardFn backward;      // empty for leaves
    std::string param_name;   // non-empty for parameter leaves
  };

  Var Emit(Tensor value, std::vector<int> inputs, BackwardFn backward);
  void CheckFiniteValue(const Tensor &t, const char *op) const;

  std::vector<Node> nodes_;
  ParameterSet *params_;
};

// Max over all parameter coordinates of
// |analytic - central_difference| / max(1, |analytic|, |central|).
// `loss_fn` must evaluate the loss from the current parameter values and
// leave the analytic gradients in `params` (zeroing them first).
double GradCheck(const std::function<double()> &loss_fn, ParameterSet &params,
                 double epsilon);

// SGD with momentum, optional L2 weight decay and global-norm gradient
// clipping; zeroes gradients after the step.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum, double weight_decay = 0.0,
               double max_grad_norm = 0.0)
      : learning_rate_(learning_rate),
        momentum_(momentum),
        weight_decay_(weight_decay),
        max_grad_norm_(max_grad_norm) {}

  void Step(ParameterSet &params);

 private:
  double learning_rate_;
  double momentum_;
  double weight_decay_;
  double max_grad_norm_;  // 0 disables clipping
  std::map<std::string, Tensor> velocity_;
};

}  // namespace jdiar

#endif  // JDIAR_AUTODIFF_H_
