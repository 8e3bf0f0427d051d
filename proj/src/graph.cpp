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

#include "plgc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "plgc/errors.hpp"
#include "plgc/rng.hpp"

namespace plgc {

void Graph::validate() const {
  if (features.rows() != num_nodes) {
    throw ContractError("graph: feature rows " + std::to_string(features.rows()) +
                        " != num_nodes " + std::to_string(num_nodes));
  }
  std::set<Edge> seen;
  for (const Edge& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) throw ContractError("graph: edge endpoint out of range");
    if (e.u == e.v) throw ContractError("graph: self-loop stored");
    if (e.u > e.v) throw ContractError("graph: edge not stored as (min, max)");
    if (!seen.insert(e).second) throw ContractError("graph: duplicate edge");
  }
  if (!labels.empty()) {
    if (labels.size() != num_nodes) throw ContractError("graph: label count != num_nodes");
    for (int y : labels) {
      if (y == kUnlabeled) continue;
      if (y < 0 || (num_classes && static_cast<std::size_t>(y) >= *num_classes)) {
        throw ContractError("graph: label " + std::to_string(y) + " out of range");
      }
    }
  }
  if (!original_ids.empty() && original_ids.size() != num_nodes) {
    throw ContractError("graph: original_ids size != num_nodes");
  }
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes;
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) nbrs[i].push_back(i);
  for (const Edge& e : g.edges) {
    nbrs[e.u].push_back(e.v);
    nbrs[e.v].push_back(e.u);
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(nbrs[i].begin(), nbrs[i].end());
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(nbrs[i].size()));
  }
  auto csr = std::make_shared<CsrMatrix>();
  csr->rows = n;
  csr->cols = n;
  csr->row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nbrs[i]) {
      csr->col_idx.push_back(j);
      csr->values.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    csr->row_ptr[i + 1] = csr->col_idx.size();
  }
  return NormalizedAdjacency{std::move(csr)};
}

NormalizedAdjacency identity_adjacency(std::size_t n) {
  Graph g;
  g.num_nodes = n;
  g.features = Matrix(n, 0);
  return normalize_adjacency(g);
}

void SbmConfig::validate() const {
  if (blocks == 0 || nodes_per_block == 0 || feature_dim == 0) {
    throw ConfigError("sbm: blocks, nodes_per_block and feature_dim must be >= 1");
  }
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0)) {
    throw ConfigError("sbm: require 0 <= p_out <= p_in <= 1");
  }
  if (!(center_separation >= 0.0) || !(feature_noise >= 0.0)) {
    throw ConfigError("sbm: center_separation and feature_noise must be >= 0");
  }
}

Matrix sbm_centers(const SbmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Matrix centers(cfg.blocks, cfg.feature_dim);
  Rng rng(derive_seed(seed, 0xce));
  std::normal_distribution<double> normal(0.0, 1.0);
  if (cfg.blocks <= cfg.feature_dim) {
    // Scaled basis vectors under a random rotation: equidistant, and no
    // coordinate is zero, so masking one feature never blanks a block.
    const auto d = static_cast<Eigen::Index>(cfg.feature_dim);
    Eigen::MatrixXd gauss(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) gauss(i, j) = normal(rng);
    const Eigen::MatrixXd rotation = gauss.householderQr().householderQ();
    const double r = cfg.center_separation / std::sqrt(2.0);
    for (std::size_t k = 0; k < cfg.blocks; ++k)
      for (std::size_t j = 0; j < cfg.feature_dim; ++j)
        centers(k, j) = r * rotation(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    return centers;
  }
  for (double& v : centers.values()) v = normal(rng);
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cfg.blocks; ++a)
    for (std::size_t b = a + 1; b < cfg.blocks; ++b)
      closest = std::min(closest, std::sqrt(squared_distance(centers.row(a), centers.row(b))));
  if (!(closest > 0.0)) throw NumericError("sbm_centers: coincident random centers");
  return scale(centers, cfg.center_separation / closest);
}

Graph generate_sbm(const SbmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = cfg.blocks * cfg.nodes_per_block;
  Graph g;
  g.num_nodes = n;
  g.num_classes = cfg.blocks;
  g.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.labels[i] = static_cast<int>(i / cfg.nodes_per_block);

  Rng edge_rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = g.labels[i] == g.labels[j] ? cfg.p_in : cfg.p_out;
      if (unit(edge_rng) < p) g.edges.push_back(Edge{i, j});
    }
  }

  const Matrix centers = sbm_centers(cfg, seed);
  g.features = Matrix(n, cfg.feature_dim);
  Rng feat_rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = centers.row(static_cast<std::size_t>(g.labels[i]));
    auto x = g.features.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double noise = cfg.feature_noise > 0.0 ? cfg.feature_noise * normal(feat_rng) : 0.0;
      x[j] = c[j] + noise;
    }
  }
  return g;
}

std::vector<int> inject_label_noise(std::span<const int> labels, double rate,
                                    std::size_t num_classes, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError("inject_label_noise: rate outside [0,1]");
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y == kUnlabeled) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ContractError("inject_label_noise: label " + std::to_string(y) + " out of range");
    }
    labeled.push_back(i);
  }
  std::vector<int> out(labels.begin(), labels.end());
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(labeled.size())));
  if (count == 0) return out;
  if (num_classes < 2) throw ContractError("inject_label_noise: need >= 2 classes to corrupt labels");

  Rng rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  std::uniform_int_distribution<int> other(0, static_cast<int>(num_classes) - 2);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t i = labeled[t];
    int y = other(rng);
    if (y >= out[i]) ++y;
    out[i] = y;
  }
  return out;
}

namespace {

Graph induced_subgraph(const Graph& g, const std::vector<std::size_t>& nodes) {
  std::vector<std::size_t> local(g.num_nodes, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;

  Graph sub;
  sub.num_nodes = nodes.size();
  sub.num_classes = g.num_classes;
  sub.features = gather_rows(g.features, nodes);
  if (g.has_labels()) {
    sub.labels.reserve(nodes.size());
    for (std::size_t v : nodes) sub.labels.push_back(g.labels[v]);
  }
  sub.original_ids.reserve(nodes.size());
  for (std::size_t v : nodes) sub.original_ids.push_back(g.original_ids.empty() ? v : g.original_ids[v]);
  for (const Edge& e : g.edges) {
    const std::size_t a = local[e.u];
    const std::size_t b = local[e.v];
    if (a != static_cast<std::size_t>(-1) && b != static_cast<std::size_t>(-1)) {
      sub.edges.push_back(make_edge(a, b));
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  return sub;
}

}  // namespace

std::vector<Graph> partition_sources(const Graph& g, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw ContractError("partition_sources: m must be >= 1");
  if (m > g.num_nodes) throw ContractError("partition_sources: more parts than nodes");
  std::vector<std::size_t> order(g.num_nodes);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Graph> parts;
  parts.reserve(m);
  const std::size_t base = g.num_nodes / m;
  const std::size_t extra = g.num_nodes % m;
  std::size_t start = 0;
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    std::vector<std::size_t> nodes(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::sort(nodes.begin(), nodes.end());
    parts.push_back(induced_subgraph(g, nodes));
    start += len;
  }
  return parts;
}

Graph augment(const Graph& g, double edge_drop, double feature_mask, std::uint64_t seed) {
  if (!(edge_drop >= 0.0 && edge_drop <= 1.0) || !(feature_mask >= 0.0 && feature_mask <= 1.0)) {
    throw ContractError("augment: rates must lie in [0,1]");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Graph out = g;
  out.edges.clear();
  for (const Edge& e : g.edges) {
    if (!(unit(rng) < edge_drop)) out.edges.push_back(e);
  }
  for (std::size_t c = 0; c < g.feature_dim(); ++c) {
    if (unit(rng) < feature_mask) {
      for (std::size_t i = 0; i < g.num_nodes; ++i) out.features(i, c) = 0.0;
    }
  }
  return out;
}

EdgeSplit split_edges(const Graph& g, std::uint64_t seed) {
  const std::size_t m = g.edges.size();
  if (m < 4) throw ContractError("split_edges: need at least 4 edges, have " + std::to_string(m));
  std::vector<Edge> edges = g.edges;
  Rng rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);

  EdgeSplit split;
  const std::size_t n_train = m / 4;
  const std::size_t n_val = m / 4;
  split.train_edges.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train),
                         edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), edges.end());

  const std::size_t n = g.num_nodes;
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (pairs - static_cast<double>(m) < static_cast<double>(m)) {
    throw ContractError("split_edges: graph too dense to sample negatives");
  }
  std::set<Edge> taken(g.edges.begin(), g.edges.end());
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  auto sample = [&](std::size_t count) {
    std::vector<Edge> out;
    out.reserve(count);
    while (out.size() < count) {
      const std::size_t a = node(rng);
      const std::size_t b = node(rng);
      if (a == b) continue;
      const Edge e = make_edge(a, b);
      if (taken.insert(e).second) out.push_back(e);
    }
    return out;
  };
  split.train_negatives = sample(split.train_edges.size());
  split.val_negatives = sample(split.val_edges.size());
  split.test_negatives = sample(split.test_edges.size());
  return split;
}

Graph with_edges(const Graph& g, std::vector<Edge> edges) {
  Graph out = g;
  out.edges = std::move(edges);
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace plgc
