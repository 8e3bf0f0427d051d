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

// Independent oracles and fixtures shared by the unit and acceptance tests.
// Nothing here calls into the code paths it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "plgc/graph.hpp"
#include "plgc/matrix.hpp"
#include "plgc/tape.hpp"

namespace plgc::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// Builds a scalar loss from one differentiable leaf on a fresh tape.
using TapeLoss = std::function<Tape::Var(Tape&, Tape::Var)>;

inline double tape_fd_error(const TapeLoss& build, const Matrix& x, double h = 1e-6) {
  const ScalarFn f = [&](const Matrix& m) {
    Tape t;
    return t.scalar(build(t, t.input(m)));
  };
  const GradientFn g = [&](const Matrix& m) {
    Tape t;
    const auto v = t.input(m);
    const auto loss = build(t, v);
    t.backward(loss);
    return t.grad(v);
  };
  return finite_difference_check(f, g, x, h);
}

// Fraction of nodes whose predicted cluster matches the truth under the best
// relabeling, by exhaustive search over all K! permutations.
inline double best_permutation_agreement(const std::vector<std::size_t>& pred, const std::vector<int>& truth,
                                         std::size_t k) {
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += static_cast<int>(perm[pred[i]]) == truth[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

// Entropic transport plan by log-domain scaling in extended precision:
// log Q_ik = s_ik/ε + f_i + g_k with row marginal 1/B and column marginal 1/K.
inline Matrix log_domain_sinkhorn(const Matrix& scores, double eps, std::size_t sweeps) {
  const std::size_t b = scores.rows(), k = scores.cols();
  std::vector<long double> f(b, 0.0L), g(k, 0.0L);
  const long double log_row = -std::log(static_cast<long double>(b));
  const long double log_col = -std::log(static_cast<long double>(k));
  auto lse = [](const std::vector<long double>& v) {
    const long double m = *std::max_element(v.begin(), v.end());
    long double s = 0.0L;
    for (long double x : v) s += std::exp(x - m);
    return m + std::log(s);
  };
  std::vector<long double> buf;
  for (std::size_t it = 0; it < sweeps; ++it) {
    for (std::size_t c = 0; c < k; ++c) {
      buf.assign(b, 0.0L);
      for (std::size_t i = 0; i < b; ++i) buf[i] = scores(i, c) / static_cast<long double>(eps) + f[i];
      g[c] = log_col - lse(buf);
    }
    for (std::size_t i = 0; i < b; ++i) {
      buf.assign(k, 0.0L);
      for (std::size_t c = 0; c < k; ++c) buf[c] = scores(i, c) / static_cast<long double>(eps) + g[c];
      f[i] = log_row - lse(buf);
    }
  }
  Matrix q(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      q(i, c) = static_cast<double>(std::exp(scores(i, c) / static_cast<long double>(eps) + f[i] + g[c]));
    }
  }
  return q;
}

// Erdos-Renyi graph with Gaussian features and `classes` round-robin labels.
inline Graph random_graph(std::size_t n, std::size_t d, double p, std::uint64_t seed, std::size_t classes = 2) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Graph g;
  g.num_nodes = n;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (coin(rng)) g.edges.push_back({u, v});
    }
  }
  g.features = Matrix(n, d);
  for (double& v : g.features.values()) v = gauss(rng);
  for (std::size_t i = 0; i < n; ++i) g.labels.push_back(static_cast<int>(i % classes));
  g.num_classes = classes;
  return g;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("plgc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace plgc::testing
