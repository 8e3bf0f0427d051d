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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "plgc/condenser.hpp"
#include "plgc/config.hpp"
#include "plgc/downstream.hpp"

namespace plgc {

// A failure inside a named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Everything fixed per seed before any training.
struct SeedData {
  Graph graph;
  std::size_t num_classes = 0;
  std::vector<std::size_t> test_idx;
  std::vector<bool> in_test;
  std::optional<EdgeSplit> split;  // link task only
  Graph pretrain_graph;            // graph seen by the label-free stages
};

// Random test_fraction of labeled nodes, sorted.
std::vector<std::size_t> split_test_nodes(const Graph& g, double test_fraction, std::uint64_t seed);

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed);

struct PlgcModel {
  std::vector<Graph> sources;
  std::vector<EncoderParams> source_encoders;
  std::vector<CondensedGraph> condensed;
  EncoderParams backbone;
};

// Pretrain and condense each source, then reconstruct the backbone. With a
// non-empty `seed_dir`, every stage persists its artifacts and is skipped
// when a completed artifact already exists.
PlgcModel build_plgc(const ExperimentConfig& cfg, const SeedData& data, std::uint64_t seed,
                     const std::filesystem::path& seed_dir = {});

// Clean fine-tuning labels: few_shot per class (0 = all) from non-test nodes
// accepted by `eligible` (empty = all).
std::vector<std::size_t> finetune_nodes(const ExperimentConfig& cfg, const SeedData& data,
                                        std::span<const int> labels, std::uint64_t seed,
                                        const std::vector<bool>& eligible = {});

// Fresh head on the frozen backbone, evaluated on the held-out part.
EvalReport finetune_and_evaluate(const ExperimentConfig& cfg, const SeedData& data, const EncoderParams& backbone,
                                 std::span<const std::size_t> train_idx, std::uint64_t seed);

// Full run over cfg.seeds. Writes out/seed_<s>/... artifacts and
// out/results.jsonl. On failure writes out/error.json and throws StageError.
std::vector<EvalReport> run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace plgc
