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
#include <vector>

#include "plgc/encoder.hpp"
#include "plgc/graph.hpp"
#include "plgc/matrix.hpp"
#include "plgc/tape.hpp"

namespace plgc {

// K pseudo-label vectors, one unit-norm row each.
struct PrototypeBank {
  Matrix protos;

  std::size_t size() const { return protos.rows(); }
  std::size_t dim() const { return protos.cols(); }
};

// Random Gaussian rows, normalized.
PrototypeBank init_bank(std::size_t k, std::size_t dim, std::uint64_t seed);

// Farthest-point pick of K rows of a unit-row embedding matrix: a seeded
// random first row, then repeatedly the row least similar to those chosen.
// Keeps prototypes inside the encoder's output range from the start.
PrototypeBank seed_bank_from_embeddings(const Matrix& z, std::size_t k, std::uint64_t seed);

// Rescales every row to unit norm. Throws DegenerateError on a zero row.
PrototypeBank normalize_bank(PrototypeBank bank);

struct SinkhornConfig {
  double epsilon = 0.05;
  std::size_t iters = 100;
  // Node batch size used during training when the graph is larger than the
  // full-batch limit; rounded down to a multiple of K.
  std::size_t batch_size = 1024;
};

// B×K transport plan: rows are nodes, columns prototypes.
struct SoftAssignment {
  Matrix plan;
};

// One prototype index per node.
struct HardAssignment {
  std::vector<std::size_t> index;
  std::size_t num_prototypes = 0;

  std::size_t rows() const { return index.size(); }
  Matrix one_hot() const;
  std::vector<std::size_t> counts() const;
};

// Balanced entropic assignment: starts from exp(scores/ε) and alternates
// column scaling (toward 1/K) and exact row scaling (to 1/B) for at most
// `iters` sweeps. Column factors are Newton steps on the dual, so the column
// marginals reach ~1e-9 in a few dozen sweeps even at small ε. Stops early once
// they are exact to 1e-15. Throws NumericError when exp(scores/ε) overflows.
SoftAssignment sinkhorn_from_scores(const Matrix& scores, double epsilon, std::size_t iters);

// scores = Z·Ỹᵀ.
SoftAssignment sinkhorn_assign(const Matrix& z, const PrototypeBank& bank, const SinkhornConfig& cfg);

// Per-row argmax; ties go to the lowest prototype index.
HardAssignment round_assignment(const SoftAssignment& q);

// Mean over rows of CE(softmax(Z·Ỹᵀ/τ), q). `q` is a constant target.
Tape::Var swapped_loss(Tape& tape, Tape::Var z, const HardAssignment& q, Tape::Var bank, double tau);

struct SwappedLoss {
  double value = 0.0;
  Matrix grad_z;
  Matrix grad_bank;
};

SwappedLoss swapped_loss(const Matrix& z, const HardAssignment& q, const PrototypeBank& bank, double tau);

struct PseudoLabelConfig {
  std::size_t num_prototypes = 3;
  std::size_t epochs = 100;
  double lr_encoder = 0.01;
  double lr_bank = 0.05;
  double tau = 0.1;
  double edge_drop = 0.2;
  double feature_mask = 0.2;
  SinkhornConfig sinkhorn;
  // Graphs with at most this many nodes train on the full node set.
  std::size_t full_batch_limit = 5000;
  EncoderConfig encoder;
  std::uint64_t seed = 0;
};

struct PseudoLabelResult {
  EncoderParams encoder;
  PrototypeBank bank;
  HardAssignment q_full;
  // Summed swapped loss at the start of each epoch (before its update).
  std::vector<double> loss_history;
  // Prototypes that were empty after the final assignment and got a node.
  std::size_t remediated = 0;
};

PseudoLabelResult train_pseudo_labels(const Graph& g, const PseudoLabelConfig& cfg);

// Gives every empty prototype the node with the most soft mass for it, taken
// from a prototype that keeps at least one node. Returns the number of
// prototypes fixed; throws NumericError if one cannot be filled.
std::size_t fill_empty_prototypes(HardAssignment& hard, const SoftAssignment& soft);

// prototypes.tsv, assignments.tsv, loss.tsv and encoder params under `dir`.
void save_pseudo_labels(const PseudoLabelResult& r, const std::filesystem::path& dir);
PseudoLabelResult load_pseudo_labels(const std::filesystem::path& dir);

}  // namespace plgc
