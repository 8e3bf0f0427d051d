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
#include <string>
#include <vector>

#include "plgc/condenser.hpp"
#include "plgc/downstream.hpp"
#include "plgc/graph.hpp"
#include "plgc/pseudo_label.hpp"
#include "plgc/theory.hpp"

namespace plgc {

enum class Task { kNode, kLink };

struct ExperimentConfig {
  std::string dataset;  // bundle directory; empty = generate an SBM per seed
  SbmConfig sbm;
  double ratio = 0.01;  // condensed nodes per original node
  std::vector<double> noise_rates{0.0, 0.3, 0.5, 0.7, 0.9};
  std::size_t num_sources = 1;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  // Clean labels per class for fine-tuning; 0 = every non-test label.
  std::size_t few_shot = 3;
  double test_fraction = 0.5;
  Task task = Task::kNode;

  PseudoLabelConfig pretrain;
  CondenseConfig condense;
  std::size_t backbone_epochs = 300;
  double backbone_lr = 0.5;
  HeadConfig head{10, 0.5, 0};
  std::size_t baseline_per_class = 1;
  // Baseline head: fit on its labeled condensed rows, then fine-tuned on the
  // clean subset (true), or a fresh head like PLGC's (false).
  bool baseline_reuse_head = true;
  std::size_t workers = 1;

  void validate() const;
  // Compact JSON of every setting (stable key order).
  std::string snapshot_json() const;
};

// K = max(1, round-half-up(r·N)).
std::size_t condensed_size(double ratio, std::size_t num_nodes);

// Flat `key = value` text: numbers, true/false, "strings", [a, b, ...] lists,
// `#` comments. Unknown keys and malformed lines throw ConfigError naming the
// line.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct TheoryConfig {
  std::size_t d = 2;
  std::size_t k = 4;
  double sigma = 1.0;
  double delta = 0.05;
  double beta = 4.0;
  double min_sep = 6.0;
  double noise_scale = 1.0;
  NoiseModel noise = NoiseModel::kGaussian;
  // 0 = use the sample-complexity bound.
  std::uint64_t samples = 0;
  std::size_t trials = 500;
  std::size_t stationarity_trials = 20;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  TheoremParams params() const;
};

TheoryConfig parse_theory_config(const std::string& text, const std::string& origin = "<config>");
TheoryConfig load_theory_config(const std::filesystem::path& path);

}  // namespace plgc
