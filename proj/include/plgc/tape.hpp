// Copyright 2026 The PLGC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "plgc/matrix.hpp"

namespace plgc {

// Reverse-mode gradient tape over the small primitive catalog needed by the
// training losses. Each recorded op caches its forward value; backward()
// replays the record once in reverse order.
//
// A tape is single-threaded. Build a fresh tape (or call clear()) for each
// forward pass.
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };

  // Differentiable leaf.
  Var input(Matrix value);
  // Leaf that receives no gradient.
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  // lhs · x for a constant sparse lhs.
  Var spmm(std::shared_ptr<const CsrMatrix> lhs, Var x);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var row_sum(Var a);
  Var row_l2_normalize(Var a);
  Var gather_rows(Var a, std::vector<std::size_t> index);
  // 1x1 sum of all entries.
  Var sum(Var a);
  // 1x1 Σ (a - target)²; divided by the entry count when `mean` is set.
  Var squared_error(Var a, Matrix target, bool mean = false);
  // 1x1 mean over rows of −Σ_k t_k log softmax(logits)_k. Targets are
  // constants (no gradient flows into them).
  Var softmax_cross_entropy(Var logits, Matrix targets);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() target w.r.t. `v`; zeros if `v` does not
  // influence it.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  double scalar(Var v) const;

  void backward(Var loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kMatmul,
    kSpmm,
    kTranspose,
    kAdd,
    kScale,
    kRelu,
    kRowSum,
    kRowNormalize,
    kGatherRows,
    kSum,
    kSquaredError,
    kSoftmaxCrossEntropy,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::size_t a = 0;
    std::size_t b = 0;
    bool needs_grad = false;
    double scalar = 0.0;
    Matrix value;
    Matrix grad;
    Matrix aux;  // target, softmax probabilities, or per-row norms
    std::vector<std::size_t> index;
    std::shared_ptr<const CsrMatrix> sparse;
  };

  Var push(Node node);
  void accumulate(std::size_t id, const Matrix& g);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> grad;  // softmax(logits) − target
};

// Single-row softmax cross-entropy, stabilized by max-subtraction.
// Throws ContractError unless `target` is a probability vector (entries ≥ 0,
// sum 1 ± 1e-9).
CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::span<const double> target);

using ScalarFn = std::function<double(const Matrix&)>;
using GradientFn = std::function<Matrix(const Matrix&)>;

// Max over entries of |g_analytic − g_fd| / max(1, |g_fd|), with g_fd the
// central difference at step h.
double finite_difference_check(const ScalarFn& f, const GradientFn& analytic, const Matrix& x,
                               double h = 1e-6);

}  // namespace plgc
