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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/theory.hpp"
#include "test_support.hpp"

namespace plgc {
namespace {

TEST(EpsilonK, ClosedFormValue) {
  const long double ref = 4.0L * std::sqrt((2.0L + std::log(80.0L)) / 100.0L);
  EXPECT_NEAR(epsilon_k(1.0, 2, 2, 0.05, 100), static_cast<double>(ref), 1e-14);
  EXPECT_NEAR(epsilon_k(1.0, 2, 2, 0.05, 100), 1.010507, 1e-6);
}

TEST(EpsilonK, ZeroSigmaAndSquareRootScaling) {
  EXPECT_EQ(epsilon_k(0.0, 3, 4, 0.1, 10), 0.0);
  for (double s : {1.0, 7.0, 250.0}) {
    EXPECT_NEAR(epsilon_k(1.3, 3, 5, 0.05, 4 * s), 0.5 * epsilon_k(1.3, 3, 5, 0.05, s), 1e-14);
  }
}

TEST(SampleComplexity, ClosedFormValue) {
  const long double raw = 64.0L * (2.0L + std::log(80.0L));
  EXPECT_EQ(sample_complexity(1.0, 4.0, 2.0, 2, 2, 0.05), static_cast<std::uint64_t>(std::ceil(raw)));
  EXPECT_EQ(sample_complexity(1.0, 4.0, 2.0, 2, 2, 0.05), 409u);
}

TEST(SampleComplexity, ZeroSigmaFloorsAtOne) {
  EXPECT_EQ(sample_complexity(0.0, 4.0, 2.0, 2, 2, 0.05), 1u);
}

TEST(SampleComplexity, InverseSquareInSeparation) {
  const long double raw = 16.0L * 2.25L * 9.0L / 1.0L * (3.0L + std::log(2.0L * 3.0L / 0.1L));
  EXPECT_EQ(sample_complexity(1.5, 3.0, 1.0, 3, 3, 0.1), static_cast<std::uint64_t>(std::ceil(raw)));
  EXPECT_EQ(sample_complexity(1.5, 3.0, 2.0, 3, 3, 0.1), static_cast<std::uint64_t>(std::ceil(raw / 4)));
}

TEST(SampleComplexity, InvertsEpsilon) {
  for (double sigma : {0.5, 1.0, 2.0}) {
    for (std::size_t d : {1u, 2u, 5u}) {
      for (double beta : {2.5, 4.0, 8.0}) {
        const double delta_sep = 6.0;
        const auto s = sample_complexity(sigma, beta, delta_sep, d, 4, 0.05);
        const double eps = epsilon_k(sigma, d, 4, 0.05, static_cast<double>(s));
        EXPECT_LE(eps, delta_sep / beta * (1 + 1e-12));
      }
    }
  }
}

TEST(NetSize, PowersOfFiveAndOverflowBoundary) {
  EXPECT_EQ(net_size_bound(1), 5u);
  EXPECT_EQ(net_size_bound(3), 125u);
  // First exponent where 5^d no longer fits in an unsigned 64-bit integer.
  unsigned __int128 p = 1;
  std::size_t first_overflow = 0;
  for (std::size_t d = 1; d < 64; ++d) {
    p *= 5;
    if (p > std::numeric_limits<std::uint64_t>::max()) {
      first_overflow = d;
      break;
    }
    EXPECT_EQ(net_size_bound(d), static_cast<std::uint64_t>(p));
  }
  EXPECT_EQ(first_overflow, 28u);
  EXPECT_THROW(net_size_bound(first_overflow), NumericError);
}

TEST(TheoremParams, GridCentersAreSeparated) {
  const TheoremParams p = make_theorem_params(2, 4, 1.0, 0.05, 4.0, 6.0);
  ASSERT_EQ(p.centers.rows(), 4u);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      EXPECT_GE(std::sqrt(squared_distance(p.centers.row(a), p.centers.row(b))), 6.0 - 1e-12);
    }
  }
  for (auto s : p.samples) EXPECT_EQ(s, sample_complexity(1.0, 4.0, 6.0, 2, 4, 0.05));
  TheoremParams bad = p;
  bad.beta = 2.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ConcentrationTrial, NoiselessIsExact) {
  TheoremParams p = make_theorem_params(3, 5, 0.0, 0.05, 4.0, 6.0);
  p.samples.assign(5, 20);
  const TrialOutcome o = run_concentration_trial(p, 1);
  EXPECT_TRUE(o.concentration_holds);
  for (double d : o.deviations) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(o.interior_fraction(), 1.0);
  EXPECT_NEAR(o.min_separation, 6.0, 1e-12);
}

TEST(ConcentrationTrial, SeparationFollowsWhenBoundsHold) {
  const TheoremParams p = make_theorem_params(2, 4, 1.0, 0.05, 4.0, 6.0);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const TrialOutcome o = run_concentration_trial(p, s);
    if (!o.concentration_holds) continue;
    EXPECT_GE(o.min_separation, (1 - 2 / p.beta) * p.min_sep);
    EXPECT_EQ(o.interior_correct, o.interior_points);
  }
}

TEST(ValidateTheorem, DefaultPassesAndIsDeterministic) {
  const TheoremParams p = make_theorem_params(2, 4, 1.0, 0.05, 4.0, 6.0);
  const TheoremReport a = validate_theorem(p, 120, 5, 2);
  const TheoremReport b = validate_theorem(p, 120, 5, 1);
  EXPECT_EQ(theorem_report_json(p, a), theorem_report_json(p, b));
  EXPECT_EQ(theorem_deviations_csv(a), theorem_deviations_csv(b));
  EXPECT_NEAR(a.rate_threshold, 0.05 + 2 * std::sqrt(0.05 * 0.95 / 120), 1e-15);
  EXPECT_EQ(a.interior_violations, 0u);
  EXPECT_EQ(a.separation_violations, 0u);
  const auto j = nlohmann::json::parse(theorem_report_json(p, a));
  EXPECT_EQ(j.at("trials").get<std::size_t>(), 120u);
  EXPECT_THROW(validate_theorem(p, 99, 0), ContractError);
}

TEST(ValidateTheorem, UniformNoiseStillWithinBound) {
  TheoremParams p = make_theorem_params(2, 4, 1.0, 0.05, 4.0, 6.0);
  p.noise = NoiseModel::kUniform;
  const TheoremReport r = validate_theorem(p, 100, 0, 2);
  EXPECT_LE(r.concentration_rate, r.rate_threshold);
}

TEST(ValidateTheorem, InflatedNoiseBreaksTheBound) {
  TheoremParams p = make_theorem_params(2, 4, 1.0, 0.05, 4.0, 6.0);
  p.noise_scale = 10.0;
  const TheoremReport r = validate_theorem(p, 100, 0, 2);
  EXPECT_GT(r.concentration_rate, p.delta);
  EXPECT_FALSE(r.pass);
}

TEST(Stationarity, SinglePointGivesItsDirection) {
  const Matrix z = Matrix::from_rows({{3, 4, 0}});
  const Matrix q = Matrix::from_rows({{1}});
  const Matrix y = fit_unit_prototypes(z, q, Matrix::from_rows({{0, 0, 1}}));
  EXPECT_NEAR(y(0, 0), 0.6, 1e-9);
  EXPECT_NEAR(y(0, 1), 0.8, 1e-9);
  EXPECT_NEAR(y(0, 2), 0.0, 1e-9);
}

TEST(Stationarity, AntipodalPairIsDegenerate) {
  const Matrix z = Matrix::from_rows({{1, 0}, {-1, 0}});
  const Matrix q = Matrix::from_rows({{1}, {1}});
  const auto c = stationarity_cosines(z, q, Matrix::from_rows({{0, 1}}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(std::isnan(c[0]));
}

TEST(Stationarity, RandomTrialsConverge) {
  const StationarityReport r = validate_stationarity(10, 3);
  EXPECT_EQ(r.trials, 10u);
  EXPECT_EQ(r.converged, 10u);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.min_cosine, 1 - 1e-6);
  EXPECT_THROW(validate_stationarity(9, 0), ContractError);
}

}  // namespace
}  // namespace plgc
