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
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "plgc/matrix.hpp"

namespace plgc {

inline constexpr int kUnlabeled = -1;

// Undirected edge stored once with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct Graph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  Matrix features;  // num_nodes x d
  // Empty when the graph carries no labels; otherwise one entry per node,
  // kUnlabeled for unlabeled nodes.
  std::vector<int> labels;
  std::optional<std::size_t> num_classes;
  // For induced subgraphs: original node id of each node. Empty = identity.
  std::vector<std::size_t> original_ids;

  std::size_t feature_dim() const { return features.cols(); }
  bool has_labels() const { return !labels.empty(); }

  // Throws ContractError on any broken invariant (endpoint range, self-loop,
  // duplicate edge, feature/label row counts, label range).
  void validate() const;
};

// Â = D^{-1/2}(A+I)D^{-1/2}, D the degree matrix of A+I.
struct NormalizedAdjacency {
  std::shared_ptr<const CsrMatrix> matrix;

  std::size_t size() const { return matrix ? matrix->rows : 0; }
};

NormalizedAdjacency normalize_adjacency(const Graph& g);
// The propagation operator of an edgeless graph on n nodes.
NormalizedAdjacency identity_adjacency(std::size_t n);

struct SbmConfig {
  std::size_t blocks = 3;
  std::size_t nodes_per_block = 100;
  double p_in = 0.3;
  double p_out = 0.02;
  std::size_t feature_dim = 16;
  double center_separation = 6.0;
  double feature_noise = 1.0;

  void validate() const;
};

// Block centers with pairwise distance ≥ center_separation. When
// blocks ≤ feature_dim they are rows of a seeded random rotation, scaled so
// every pair sits exactly center_separation apart; otherwise random
// directions rescaled so the closest pair sits at center_separation.
Matrix sbm_centers(const SbmConfig& cfg, std::uint64_t seed);

// Nodes are block-major: node i belongs to block i / nodes_per_block.
Graph generate_sbm(const SbmConfig& cfg, std::uint64_t seed);

// Corrupts exactly round(rate · #labeled) distinct labeled nodes, each to a
// uniformly random different class.
std::vector<int> inject_label_noise(std::span<const int> labels, double rate,
                                    std::size_t num_classes, std::uint64_t seed);

// Random near-equal node partition into m induced subgraphs. Cross-part
// edges are dropped; original_ids maps back to the input's node ids.
std::vector<Graph> partition_sources(const Graph& g, std::size_t m, std::uint64_t seed);

// Independent edge dropping and feature-column masking.
Graph augment(const Graph& g, double edge_drop, double feature_mask, std::uint64_t seed);

struct EdgeSplit {
  std::vector<Edge> train_edges;
  std::vector<Edge> val_edges;
  std::vector<Edge> test_edges;
  std::vector<Edge> train_negatives;
  std::vector<Edge> val_negatives;
  std::vector<Edge> test_negatives;
};

// 1:1:2 split of shuffled edges (remainder to test), plus as many sampled
// non-edges per split as it has edges. Negatives are distinct across splits.
EdgeSplit split_edges(const Graph& g, std::uint64_t seed);

// Same nodes, features and labels with a replaced edge list.
Graph with_edges(const Graph& g, std::vector<Edge> edges);

// Bundle directory: features.tsv, edges.tsv, labels.tsv (optional), meta.json.
Graph load_graph(const std::filesystem::path& dir);
void save_graph(const Graph& g, const std::filesystem::path& dir);

}  // namespace plgc
