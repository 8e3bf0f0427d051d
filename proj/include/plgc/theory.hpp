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
#include <string>
#include <vector>

#include "plgc/matrix.hpp"

namespace plgc {

// Centroid deviation radius 4σ√((d + ln(2K/δ)) / s_k).
double epsilon_k(double sigma, std::size_t d, std::size_t k, double delta, double s_k);

// ⌈16σ²β²/Δ² · (d + ln(2K/δ))⌉, at least 1.
std::uint64_t sample_complexity(double sigma, double beta, double min_sep, std::size_t d, std::size_t k,
                                double delta);

// 5^d; throws NumericError when it does not fit in 64 bits.
std::uint64_t net_size_bound(std::size_t d);

enum class NoiseModel { kGaussian, kUniform };

struct TheoremParams {
  std::size_t d = 2;
  std::size_t k = 4;
  double sigma = 1.0;
  double delta = 0.05;
  double beta = 4.0;
  double min_sep = 6.0;
  // Samples are drawn with σ·noise_scale while ε_k uses σ; >1 is a negative
  // control where the nominal bound is too tight.
  double noise_scale = 1.0;
  NoiseModel noise = NoiseModel::kGaussian;
  Matrix centers;                    // k × d
  std::vector<std::uint64_t> samples;  // s_k per cluster

  void validate() const;
};

// Centers on the integer grid scaled by min_sep (first k grid points in
// lexicographic order), s_k = sample_complexity for every cluster.
TheoremParams make_theorem_params(std::size_t d, std::size_t k, double sigma, double delta, double beta,
                                  double min_sep);

struct TrialOutcome {
  std::vector<double> deviations;   // ‖ỹ_k − μ_k‖, unnormalized sample mean
  std::vector<double> epsilons;
  std::vector<double> normalized_deviations;  // ‖ỹ_k/‖ỹ_k‖ − μ_k‖, reported only
  bool concentration_holds = false;
  std::size_t interior_points = 0;
  std::size_t interior_correct = 0;
  double min_separation = 0.0;

  double interior_fraction() const;
};

TrialOutcome run_concentration_trial(const TheoremParams& p, std::uint64_t seed);

struct TheoremReport {
  std::size_t trials = 0;
  std::uint64_t base_seed = 0;
  std::size_t concentration_violations = 0;
  std::size_t holding_trials = 0;
  std::size_t interior_violations = 0;    // holding trials with a misassigned interior point
  std::size_t separation_violations = 0;  // holding trials below (1 − 2/β)Δ
  double concentration_rate = 0.0;
  double rate_threshold = 0.0;  // δ + 2√(δ(1−δ)/trials)
  double separation_floor = 0.0;
  bool pass = false;
  std::vector<TrialOutcome> outcomes;
};

// Trial t uses seed base_seed + t. Requires trials ≥ 100.
TheoremReport validate_theorem(const TheoremParams& p, std::size_t trials, std::uint64_t base_seed,
                               std::size_t workers = 1);

std::string theorem_report_json(const TheoremParams& p, const TheoremReport& r);
// trial,cluster,deviation,epsilon,normalized_deviation
std::string theorem_deviations_csv(const TheoremReport& r);

// Maximizes Σ_i q_ik z_iᵀ y_k over unit-norm y_k by projected gradient
// ascent from `init`. Returns the final prototypes (k × d).
Matrix fit_unit_prototypes(const Matrix& z, const Matrix& q, const Matrix& init, std::size_t max_iters = 20000);

struct StationarityReport {
  std::size_t trials = 0;
  std::size_t converged = 0;
  std::size_t degenerate = 0;  // prototypes whose weighted sum vanished (excluded)
  double min_cosine = 1.0;
  bool pass = false;
};

// Random (Z, Q) with d = 5, K = 3 per trial; cosine(ỹ_k, Σ q_ik z_i) ≥ 1 − 1e-6
// for every non-degenerate prototype counts as converged.
StationarityReport validate_stationarity(std::size_t trials, std::uint64_t seed);

// Per-prototype cosine between fitted y_k and Σ_i q_ik z_i; NaN marks a
// degenerate (zero) sum.
std::vector<double> stationarity_cosines(const Matrix& z, const Matrix& q, const Matrix& y);

}  // namespace plgc
