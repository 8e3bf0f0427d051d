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
#include <string>
#include <vector>

#include "plgc/config.hpp"

namespace plgc {

inline constexpr const char* kMethodPlgc = "plgc";
inline constexpr const char* kMethodBaseline = "baseline";

struct SweepCell {
  double noise_rate = 0.0;
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  double value = 0.0;
  std::string error;
};

struct SweepSummary {
  double noise_rate = 0.0;
  std::string method;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over successful seeds
  std::size_t n = 0;
};

struct SweepReport {
  std::string dataset;
  std::string task = "node";
  std::string metric = "accuracy";
  std::size_t sources = 1;
  std::vector<double> noise_rates;
  std::vector<SweepCell> cells;  // noise-major, then method, then seed
  std::vector<SweepSummary> summary;

  const SweepSummary& at(double noise_rate, const std::string& method) const;
};

// Label-noise sweep for the node task. PLGC is built once per seed (its
// condensation never sees labels); the baseline condenses on noisy labels.
// Both fine-tune fresh heads on the same clean subset. Cell failures are
// recorded and the sweep continues. With a non-empty `out`, PLGC artifacts
// are cached under out/seed_<s>.
SweepReport run_noise_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out = {});

// Columns: dataset,task,method,noise_rate,sources,seed,metric,value. Failed
// cells have value "failed"; summary rows use seed "mean" / "std".
std::string sweep_csv(const SweepReport& r);

// One line per method with a mean ± std band; x ticks at the noise rates.
// Every printed or data-* number is the same string as in the CSV.
std::string sweep_svg(const SweepReport& r);

// Shortest round-trip text used in both CSV and SVG.
std::string format_metric(double v);

}  // namespace plgc
