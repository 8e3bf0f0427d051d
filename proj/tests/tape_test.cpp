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

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "plgc/errors.hpp"
#include "plgc/tape.hpp"
#include "test_support.hpp"

namespace plgc {
namespace {

using testing::random_matrix;
using testing::tape_fd_error;

// Squared distance to a fixed random target, so each output entry gets a
// distinct upstream gradient.
Tape::Var probe(Tape& t, Tape::Var v, std::uint64_t seed) {
  const Matrix& val = t.value(v);
  return t.squared_error(v, random_matrix(val.rows(), val.cols(), seed + 999));
}

class PrimitiveGradients : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PrimitiveGradients, MatchFiniteDifferences) {
  const std::uint64_t s = GetParam();
  const Matrix x = random_matrix(4, 3, s);
  const Matrix other = random_matrix(3, 5, s + 50);
  auto csr = std::make_shared<CsrMatrix>();
  csr->rows = 2;
  csr->cols = 4;
  csr->row_ptr = {0, 2, 4};
  csr->col_idx = {0, 3, 1, 2};
  csr->values = {0.5, -1.5, 2.0, 0.25};

  const double tol = 1e-4;
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.matmul(v, t.constant(other)), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.matmul(t.constant(transpose(other)), t.transpose(v)), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.spmm(csr, v), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.add(v, t.scale(v, -0.3)), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.relu(v), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.row_sum(v), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.row_l2_normalize(v), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return probe(t, t.gather_rows(v, {3, 0, 3}), s); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return t.squared_error(v, random_matrix(4, 3, s + 7)); }, x), tol);
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return t.squared_error(v, random_matrix(4, 3, s + 7), true); }, x), tol);
  Matrix targets(4, 3);
  for (std::size_t r = 0; r < 4; ++r) targets(r, (r + s) % 3) = 1.0;
  EXPECT_LE(tape_fd_error([&](Tape& t, Tape::Var v) { return t.softmax_cross_entropy(t.scale(v, 3.0), targets); }, x), tol);
}

INSTANTIATE_TEST_SUITE_P(TwentySeeds, PrimitiveGradients, ::testing::Range<std::uint64_t>(0, 20));

TEST(Tape, MatmulBackwardContract) {
  const Matrix a = random_matrix(2, 3, 1), b = random_matrix(3, 2, 2);
  Tape t;
  const auto va = t.input(a), vb = t.input(b);
  t.backward(t.sum(t.matmul(va, vb)));
  // G = ones: ∂/∂a = 1·bᵀ, ∂/∂b = aᵀ·1.
  EXPECT_LE(max_abs_diff(t.grad(va), matmul(Matrix(2, 2, 1.0), transpose(b))), 1e-15);
  EXPECT_LE(max_abs_diff(t.grad(vb), matmul(transpose(a), Matrix(2, 2, 1.0))), 1e-15);
  EXPECT_LE(tape_fd_error([&](Tape& tp, Tape::Var v) { return tp.sum(tp.matmul(v, tp.constant(b))); }, a), 1e-6);
}

TEST(Tape, BackwardTwiceWithoutNewForwardIsError) {
  Tape t;
  const auto x = t.input(Matrix(1, 1, 2.0));
  const auto loss = t.sum(x);
  t.backward(loss);
  EXPECT_THROW(t.backward(loss), ContractError);
}

TEST(Tape, BackwardNeedsScalarLoss) {
  Tape t;
  const auto x = t.input(Matrix(2, 2, 1.0));
  EXPECT_THROW(t.backward(x), ContractError);
}

TEST(Tape, ConstantsReceiveNoGradient) {
  Tape t;
  const auto c = t.constant(Matrix(1, 2, 1.0));
  const auto x = t.input(Matrix(1, 2, 3.0));
  t.backward(t.sum(t.add(c, x)));
  EXPECT_EQ(t.grad(c), Matrix(1, 2, 0.0));
  EXPECT_EQ(t.grad(x), Matrix(1, 2, 1.0));
}

TEST(Tape, RepeatedForwardBackwardIsBitIdentical) {
  const Matrix x = random_matrix(5, 4, 3);
  auto run = [&] {
    Tape t;
    const auto v = t.input(x);
    const auto loss = t.squared_error(t.row_l2_normalize(t.matmul(v, t.constant(random_matrix(4, 4, 8)))),
                                      random_matrix(5, 4, 9));
    t.backward(loss);
    return std::make_pair(t.scalar(loss), t.grad(v));
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLnTwo) {
  const std::vector<double> logits{0.3, 0.3}, target{1.0, 0.0};
  EXPECT_NEAR(softmax_cross_entropy(logits, target).loss, std::log(2.0), 1e-15);
}

TEST(SoftmaxCrossEntropy, ClosedFormValue) {
  const std::vector<double> logits{1.0, 0.0}, target{1.0, 0.0};
  EXPECT_NEAR(softmax_cross_entropy(logits, target).loss, std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(std::log1p(std::exp(-1.0)), 0.31326, 1e-5);
}

TEST(SoftmaxCrossEntropy, TargetEqualSoftmaxGivesZeroGradient) {
  const std::vector<double> logits{0.2, -1.0, 2.0};
  double z = 0;
  for (double l : logits) z += std::exp(l);
  std::vector<double> target;
  for (double l : logits) target.push_back(std::exp(l) / z);
  for (double g : softmax_cross_entropy(logits, target).grad) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(SoftmaxCrossEntropy, StableForHugeLogits) {
  const std::vector<double> logits{1000.0, 0.0}, target{0.0, 1.0};
  const auto ce = softmax_cross_entropy(logits, target);
  EXPECT_TRUE(std::isfinite(ce.loss));
  EXPECT_NEAR(ce.loss, 1000.0, 1e-9);
}

TEST(SoftmaxCrossEntropy, RejectsNonDistributions) {
  const std::vector<double> logits{0.0, 0.0};
  EXPECT_THROW(softmax_cross_entropy(logits, std::vector<double>{0.5, 0.6}), ContractError);
  EXPECT_THROW(softmax_cross_entropy(logits, std::vector<double>{1.5, -0.5}), ContractError);
}

TEST(FiniteDifference, QuadraticIsExact) {
  const Matrix x = random_matrix(3, 3, 4);
  const double err = finite_difference_check([](const Matrix& m) { return frobenius_sq(m); },
                                             [](const Matrix& m) { return scale(m, 2.0); }, x, 1e-5);
  EXPECT_LE(err, 1e-8);
}

TEST(FiniteDifference, ConstantFunctionHasZeroError) {
  const Matrix x = random_matrix(2, 2, 5);
  const double err = finite_difference_check([](const Matrix&) { return 3.0; },
                                             [](const Matrix& m) { return Matrix(m.rows(), m.cols()); }, x);
  EXPECT_EQ(err, 0.0);
}

TEST(FiniteDifference, DetectsWrongGradient) {
  const Matrix x = random_matrix(2, 2, 6);
  const double err = finite_difference_check([](const Matrix& m) { return frobenius_sq(m); },
                                             [](const Matrix& m) { return scale(m, 3.0); }, x);
  EXPECT_GT(err, 1e-3);
}

}  // namespace
}  // namespace plgc
