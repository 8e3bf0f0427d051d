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
#include <span>
#include <string>
#include <vector>

#include "plgc/encoder.hpp"
#include "plgc/graph.hpp"

namespace plgc {

// Node head: weight e×C. Link head: weight e×1 over z_u ⊙ z_v. Bias 1×cols.
struct HeadParams {
  Matrix weight;
  Matrix bias;

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct HeadConfig {
  std::size_t epochs = 200;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

// min(n, available) nodes per class drawn without replacement. `eligible`,
// when non-empty, restricts the pool (one flag per node). Output is sorted.
std::vector<std::size_t> sample_few_shot(std::span<const int> labels, std::size_t n_per_class,
                                         std::size_t num_classes, std::uint64_t seed,
                                         const std::vector<bool>& eligible = {});

std::size_t infer_num_classes(const Graph& g);

// weight.tsv and bias.tsv under `dir`.
void save_head(const HeadParams& h, const std::filesystem::path& dir);
HeadParams load_head(const std::filesystem::path& dir);

// Glorot-uniform weight, zero bias.
HeadParams init_head(std::size_t embed_dim, std::size_t outputs, std::uint64_t seed);

// Gradient descent on mean softmax cross-entropy over train_idx.
HeadParams train_node_head(const Matrix& embeddings, std::span<const int> labels,
                           std::span<const std::size_t> train_idx, std::size_t num_classes,
                           const HeadConfig& cfg);
// Same, continuing from `init` instead of a seeded head.
HeadParams train_node_head(const Matrix& embeddings, std::span<const int> labels,
                           std::span<const std::size_t> train_idx, const HeadConfig& cfg, HeadParams init);

// Embeds g once with the frozen backbone and trains a fresh head.
HeadParams finetune_node_head(const EncoderParams& backbone, const Graph& g,
                              std::span<const std::size_t> train_idx, const HeadConfig& cfg);

Matrix head_logits(const Matrix& embeddings, const HeadParams& head);

// Row-wise argmax, ties to the lowest column.
std::vector<std::size_t> argmax_rows(const Matrix& logits);

struct EvalReport {
  std::string task;    // "node" or "link"
  std::string metric;  // "accuracy" or "auroc"
  double value = 0.0;
  std::size_t n_eval = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::string config;  // JSON snapshot, may be empty

  std::string to_json_line() const;
};

double node_accuracy(const Matrix& embeddings, const HeadParams& head, std::span<const int> labels,
                     std::span<const std::size_t> test_idx);

EvalReport evaluate_node(const EncoderParams& backbone, const HeadParams& head, const Graph& g,
                         std::span<const std::size_t> test_idx);

// Hadamard features of node pairs.
Matrix pair_features(const Matrix& embeddings, std::span<const Edge> pairs);

// Message passing over the split's training edges only; logistic loss on
// train edges vs train negatives.
HeadParams finetune_link_head(const EncoderParams& backbone, const Graph& g, const EdgeSplit& split,
                              const HeadConfig& cfg);

std::vector<double> link_scores(const Matrix& embeddings, const HeadParams& head, std::span<const Edge> pairs);

// AUROC on test edges vs test negatives.
EvalReport evaluate_link(const EncoderParams& backbone, const HeadParams& head, const Graph& g,
                         const EdgeSplit& split);

// P(score_pos > score_neg) + ½ P(equal). Exact pair count for n ≤ 10⁴,
// rank-sum with midranks above that. Throws ContractError for one class.
double auroc(std::span<const double> scores, std::span<const int> labels);
double auroc_pairwise(std::span<const double> scores, std::span<const int> labels);
double auroc_rank_sum(std::span<const double> scores, std::span<const int> labels);

// Reference model: encoder and linear head trained jointly with
// cross-entropy on the labeled train_idx over the full graph.
struct SupervisedConfig {
  EncoderConfig encoder;
  std::size_t epochs = 100;
  double lr = 0.05;
};

EncoderParams train_supervised_encoder(const Graph& g, std::span<const std::size_t> train_idx,
                                       const SupervisedConfig& cfg);

}  // namespace plgc
