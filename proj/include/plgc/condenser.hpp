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
#include "plgc/pseudo_label.hpp"

namespace plgc {

// K synthetic nodes with implicit identity adjacency; row k is paired with
// prototype k.
struct CondensedGraph {
  Matrix features;
  PrototypeBank bank;
  std::string source_id;
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

// Row k = mean original feature row of the nodes assigned to prototype k.
Matrix init_condensed(const Graph& g, const HardAssignment& q, std::size_t k);

// Σ_k ‖ỹ_k − encode(θ, I, X')_k‖².
double condensation_loss(const EncoderParams& encoder, const PrototypeBank& bank, const Matrix& x);

struct CondenseConfig {
  std::size_t steps = 300;
  double lr = 0.1;
  // Per-step cap on lr halvings before the step is skipped.
  std::size_t max_halvings = 40;
};

// Gradient descent on X' only (encoder and bank frozen). A step whose loss
// would increase is retried with half the rate; the rate resets every step,
// so the recorded loss never increases.
CondensedGraph condense(const Matrix& init, const EncoderParams& encoder, const PrototypeBank& bank,
                        const CondenseConfig& cfg, std::string source_id = {});

struct BackboneResult {
  EncoderParams params;
  std::vector<double> loss_history;  // summed loss before each epoch's step
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Fresh encoder trained on Σ_sources Σ_k ‖ỹ_k − z_k‖² with identity
// adjacency. The step size is lr / #sources, so duplicated sources leave the
// iterate sequence unchanged.
BackboneResult reconstruct_backbone(std::span<const CondensedGraph> sets, const EncoderConfig& enc_cfg,
                                    std::size_t epochs, double lr, std::uint64_t seed);

double backbone_loss(const EncoderParams& params, std::span<const CondensedGraph> sets);

// Supervised comparator: per_class synthetic rows per class whose mean
// embedding (under `encoder`, identity adjacency) is matched to the mean
// embedding of that class's labeled original nodes.
struct BaselineCondensed {
  Matrix features;          // (C·per_class) × d
  std::vector<int> labels;  // class of each synthetic row
  Matrix class_means;       // C × e targets
  std::size_t per_class = 1;
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

BaselineCondensed supervised_baseline_condense(const Graph& g, std::span<const int> labels,
                                               const EncoderParams& encoder, std::size_t per_class,
                                               const CondenseConfig& cfg);

// Condensed set for backbone reconstruction: each synthetic row is paired
// with its normalized class-mean target.
CondensedGraph baseline_as_condensed(const BaselineCondensed& b, std::string source_id = "baseline");

// features.tsv, prototypes.tsv, meta.json (K, d, embed_dim, source_id, final_loss).
void save_condensed(const CondensedGraph& c, const std::filesystem::path& dir);
CondensedGraph load_condensed(const std::filesystem::path& dir);

}  // namespace plgc
