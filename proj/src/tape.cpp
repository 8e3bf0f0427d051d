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

#include "plgc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plgc/errors.hpp"

namespace plgc {

namespace {

constexpr double kDegenerateNorm = 1e-12;

}  // namespace

Tape::Var Tape::push(Node node) {
  backward_done_ = false;
  node.grad = Matrix(node.value.rows(), node.value.cols());
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Tape::Var Tape::input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Tape::Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var a, Var b) {
  Node n;
  n.op = Op::kMatmul;
  n.a = a.id;
  n.b = b.id;
  n.value = plgc::matmul(nodes_[a.id].value, nodes_[b.id].value);
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::spmm(std::shared_ptr<const CsrMatrix> lhs, Var x) {
  Node n;
  n.op = Op::kSpmm;
  n.a = x.id;
  n.value = lhs->multiply(nodes_[x.id].value);
  n.sparse = std::move(lhs);
  n.needs_grad = nodes_[x.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.value = plgc::transpose(nodes_[a.id].value);
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = plgc::add(nodes_[a.id].value, nodes_[b.id].value);
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.scalar = s;
  n.value = plgc::scale(nodes_[a.id].value, s);
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::relu(Var a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.value = plgc::relu(nodes_[a.id].value);
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::row_sum(Var a) {
  const Matrix& x = nodes_[a.id].value;
  Node n;
  n.op = Op::kRowSum;
  n.a = a.id;
  n.value = Matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v;
    n.value(i, 0) = s;
  }
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::row_l2_normalize(Var a) {
  const Matrix& x = nodes_[a.id].value;
  Node n;
  n.op = Op::kRowNormalize;
  n.a = a.id;
  n.aux = Matrix(x.rows(), 1);
  n.value = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = n.value.row(i);
    const double norm = l2_norm(r);
    if (!(norm > kDegenerateNorm)) {
      throw DegenerateError("row_l2_normalize: row " + std::to_string(i) + " has norm " +
                            format_double(norm));
    }
    n.aux(i, 0) = norm;
    for (double& v : r) v /= norm;
  }
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::gather_rows(Var a, std::vector<std::size_t> index) {
  Node n;
  n.op = Op::kGatherRows;
  n.a = a.id;
  n.value = plgc::gather_rows(nodes_[a.id].value, index);
  n.index = std::move(index);
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  double s = 0.0;
  for (double v : nodes_[a.id].value.values()) s += v;
  n.value = Matrix(1, 1, s);
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::squared_error(Var a, Matrix target, bool mean) {
  const Matrix& x = nodes_[a.id].value;
  if (x.rows() != target.rows() || x.cols() != target.cols()) {
    throw ContractError("squared_error: prediction and target shapes differ");
  }
  Node n;
  n.op = Op::kSquaredError;
  n.a = a.id;
  n.scalar = mean && x.size() > 0 ? 1.0 / static_cast<double>(x.size()) : 1.0;
  double s = 0.0;
  auto xv = x.values();
  auto tv = target.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - tv[i];
    s += d * d;
  }
  n.value = Matrix(1, 1, s * n.scalar);
  n.aux = std::move(target);
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::softmax_cross_entropy(Var logits, Matrix targets) {
  const Matrix& x = nodes_[logits.id].value;
  if (x.rows() != targets.rows() || x.cols() != targets.cols()) {
    throw ContractError("softmax_cross_entropy: logits and targets shapes differ");
  }
  Node n;
  n.op = Op::kSoftmaxCrossEntropy;
  n.a = logits.id;
  n.aux = Matrix(x.rows(), x.cols());  // holds softmax − target
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto ce = plgc::softmax_cross_entropy(x.row(i), targets.row(i));
    total += ce.loss;
    std::copy(ce.grad.begin(), ce.grad.end(), n.aux.row(i).begin());
  }
  const double inv = x.rows() > 0 ? 1.0 / static_cast<double>(x.rows()) : 0.0;
  n.scalar = inv;
  n.value = Matrix(1, 1, total * inv);
  n.needs_grad = nodes_[logits.id].needs_grad;
  return push(std::move(n));
}

double Tape::scalar(Var v) const {
  const Matrix& m = nodes_[v.id].value;
  if (m.rows() != 1 || m.cols() != 1) throw ContractError("Tape::scalar: value is not 1x1");
  return m(0, 0);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  auto dst = n.grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (backward_done_) {
    throw ContractError("Tape::backward called twice without a new forward pass");
  }
  const Matrix& out = nodes_[loss.id].value;
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("Tape::backward: loss must be a 1x1 value");
  }
  backward_done_ = true;
  for (auto& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
  nodes_[loss.id].grad(0, 0) = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::kLeaf) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        const Matrix& a = nodes_[n.a].value;
        const Matrix& b = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) accumulate(n.a, plgc::matmul(g, plgc::transpose(b)));
        if (nodes_[n.b].needs_grad) accumulate(n.b, plgc::matmul(plgc::transpose(a), g));
        break;
      }
      case Op::kSpmm:
        accumulate(n.a, n.sparse->transpose().multiply(g));
        break;
      case Op::kTranspose:
        accumulate(n.a, plgc::transpose(g));
        break;
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kScale:
        accumulate(n.a, plgc::scale(g, n.scalar));
        break;
      case Op::kRelu: {
        const Matrix& x = nodes_[n.a].value;
        Matrix masked = g;
        auto xv = x.values();
        auto mv = masked.values();
        for (std::size_t i = 0; i < mv.size(); ++i)
          if (!(xv[i] > 0.0)) mv[i] = 0.0;
        accumulate(n.a, masked);
        break;
      }
      case Op::kRowSum: {
        const Matrix& x = nodes_[n.a].value;
        Matrix ga(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (double& v : ga.row(i)) v = g(i, 0);
        accumulate(n.a, ga);
        break;
      }
      case Op::kRowNormalize: {
        // y = x/‖x‖  ⇒  ∂L/∂x = (g − y (y·g)) / ‖x‖
        Matrix ga(n.value.rows(), n.value.cols());
        for (std::size_t i = 0; i < n.value.rows(); ++i) {
          auto y = n.value.row(i);
          auto gi = g.row(i);
          const double proj = dot(y, gi);
          const double inv = 1.0 / n.aux(i, 0);
          auto dst = ga.row(i);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = (gi[j] - y[j] * proj) * inv;
        }
        accumulate(n.a, ga);
        break;
      }
      case Op::kGatherRows: {
        const Matrix& x = nodes_[n.a].value;
        Matrix ga(x.rows(), x.cols());
        for (std::size_t i = 0; i < n.index.size(); ++i) {
          auto dst = ga.row(n.index[i]);
          auto src = g.row(i);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
        accumulate(n.a, ga);
        break;
      }
      case Op::kSum: {
        const Matrix& x = nodes_[n.a].value;
        accumulate(n.a, Matrix(x.rows(), x.cols(), g(0, 0)));
        break;
      }
      case Op::kSquaredError: {
        const Matrix& x = nodes_[n.a].value;
        Matrix ga = plgc::subtract(x, n.aux);
        for (double& v : ga.values()) v *= 2.0 * n.scalar * g(0, 0);
        accumulate(n.a, ga);
        break;
      }
      case Op::kSoftmaxCrossEntropy:
        accumulate(n.a, plgc::scale(n.aux, n.scalar * g(0, 0)));
        break;
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::span<const double> target) {
  if (logits.size() != target.size() || logits.empty()) {
    throw ContractError("softmax_cross_entropy: logits and target lengths differ");
  }
  double mass = 0.0;
  for (double t : target) {
    if (!(t >= 0.0)) throw ContractError("softmax_cross_entropy: negative target entry");
    mass += t;
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    throw ContractError("softmax_cross_entropy: target sums to " + format_double(mass));
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - top);
  const double log_z = std::log(z) + top;

  CrossEntropy out;
  out.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double log_p = logits[k] - log_z;
    if (target[k] > 0.0) out.loss -= target[k] * log_p;
    out.grad[k] = std::exp(log_p) - target[k];
  }
  return out;
}

double finite_difference_check(const ScalarFn& f, const GradientFn& analytic, const Matrix& x,
                               double h) {
  const Matrix g = analytic(x);
  if (g.rows() != x.rows() || g.cols() != x.cols()) {
    throw ContractError("finite_difference_check: gradient shape differs from input");
  }
  Matrix probe = x;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + h;
    const double up = f(probe);
    probe.values()[i] = orig - h;
    const double down = f(probe);
    probe.values()[i] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double err = std::abs(g.values()[i] - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace plgc
