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

#include "plgc/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/rng.hpp"

namespace plgc {

double epsilon_k(double sigma, std::size_t d, std::size_t k, double delta, double s_k) {
  if (s_k < 1.0) throw ContractError("epsilon_k: s_k must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("epsilon_k: delta must lie in (0,1)");
  const double tail = static_cast<double>(d) + std::log(2.0 * static_cast<double>(k) / delta);
  return 4.0 * sigma * std::sqrt(tail / s_k);
}

std::uint64_t sample_complexity(double sigma, double beta, double min_sep, std::size_t d, std::size_t k,
                                double delta) {
  if (!(min_sep > 0.0) || !(beta > 0.0)) throw ContractError("sample_complexity: need Δ > 0 and β > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("sample_complexity: delta must lie in (0,1)");
  const long double tail = static_cast<long double>(d) + std::log(2.0L * k / static_cast<long double>(delta));
  const long double bound = 16.0L * sigma * sigma * beta * beta / (static_cast<long double>(min_sep) * min_sep) * tail;
  const long double c = std::ceil(bound);
  if (c > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())) {
    throw NumericError("sample_complexity: bound exceeds 64-bit range");
  }
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c));
}

std::uint64_t net_size_bound(std::size_t d) {
  if (d == 0) throw ContractError("net_size_bound: d must be >= 1");
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / 5) {
      throw NumericError("net_size_bound: 5^" + std::to_string(d) + " exceeds 64 bits");
    }
    n *= 5;
  }
  return n;
}

void TheoremParams::validate() const {
  if (d == 0 || k == 0) throw ConfigError("theorem: d and K must be >= 1");
  if (sigma < 0.0) throw ConfigError("theorem: sigma must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("theorem: delta must lie in (0,1)");
  if (!(beta > 2.0)) throw ConfigError("theorem: beta must exceed 2");
  if (!(min_sep > 0.0)) throw ConfigError("theorem: min separation must be > 0");
  if (centers.rows() != k || centers.cols() != d) throw ConfigError("theorem: centers must be K×d");
  if (samples.size() != k) throw ConfigError("theorem: need one sample count per cluster");
  for (auto s : samples) {
    if (s == 0) throw ConfigError("theorem: sample counts must be >= 1");
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (std::sqrt(squared_distance(centers.row(a), centers.row(b))) < min_sep * (1.0 - 1e-12)) {
        throw ConfigError("theorem: centers closer than the declared separation");
      }
    }
  }
}

TheoremParams make_theorem_params(std::size_t d, std::size_t k, double sigma, double delta, double beta,
                                  double min_sep) {
  TheoremParams p;
  p.d = d;
  p.k = k;
  p.sigma = sigma;
  p.delta = delta;
  p.beta = beta;
  p.min_sep = min_sep;
  std::size_t side = 1;
  while (std::pow(static_cast<double>(side), static_cast<double>(d)) < static_cast<double>(k)) ++side;
  p.centers = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t code = c;
    for (std::size_t j = d; j-- > 0;) {
      p.centers(c, j) = static_cast<double>(code % side) * min_sep;
      code /= side;
    }
  }
  p.samples.assign(k, sample_complexity(sigma, beta, min_sep, d, k, delta));
  return p;
}

double TrialOutcome::interior_fraction() const {
  return interior_points == 0 ? 1.0 : static_cast<double>(interior_correct) / static_cast<double>(interior_points);
}

TrialOutcome run_concentration_trial(const TheoremParams& p, std::uint64_t seed) {
  p.validate();
  Rng rng(seed);
  const double scale = p.sigma * p.noise_scale;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<Matrix> points;
  Matrix centroids(p.k, p.d);
  TrialOutcome out;
  out.concentration_holds = true;
  for (std::size_t c = 0; c < p.k; ++c) {
    Matrix z(p.samples[c], p.d);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t j = 0; j < p.d; ++j) {
        const double e = p.noise == NoiseModel::kGaussian ? gauss(rng) : unif(rng);
        z(i, j) = p.centers(c, j) + scale * e;
        centroids(c, j) += z(i, j);
      }
    }
    for (double& v : centroids.row(c)) v /= static_cast<double>(z.rows());
    const double dev = std::sqrt(squared_distance(centroids.row(c), p.centers.row(c)));
    const double eps = epsilon_k(p.sigma, p.d, p.k, p.delta, static_cast<double>(p.samples[c]));
    out.deviations.push_back(dev);
    out.epsilons.push_back(eps);
    out.concentration_holds = out.concentration_holds && dev <= eps;

    const double norm = l2_norm(centroids.row(c));
    double nd = std::numeric_limits<double>::quiet_NaN();
    if (norm > 0.0) {
      double s = 0.0;
      for (std::size_t j = 0; j < p.d; ++j) {
        const double diff = centroids(c, j) / norm - p.centers(c, j);
        s += diff * diff;
      }
      nd = std::sqrt(s);
    }
    out.normalized_deviations.push_back(nd);
    points.push_back(std::move(z));
  }

  // Interior points: within Δ/2 − ε_k of their own center.
  for (std::size_t c = 0; c < p.k; ++c) {
    const double radius = p.min_sep / 2.0 - out.epsilons[c];
    for (std::size_t i = 0; i < points[c].rows(); ++i) {
      const auto z = points[c].row(i);
      if (std::sqrt(squared_distance(z, p.centers.row(c))) >= radius) continue;
      ++out.interior_points;
      std::size_t best = 0;
      double best_d = squared_distance(z, centroids.row(0));
      for (std::size_t o = 1; o < p.k; ++o) {
        const double dd = squared_distance(z, centroids.row(o));
        if (dd < best_d) {
          best_d = dd;
          best = o;
        }
      }
      out.interior_correct += best == c;
    }
  }

  out.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < p.k; ++a) {
    for (std::size_t b = a + 1; b < p.k; ++b) {
      out.min_separation = std::min(out.min_separation, std::sqrt(squared_distance(centroids.row(a), centroids.row(b))));
    }
  }
  return out;
}

TheoremReport validate_theorem(const TheoremParams& p, std::size_t trials, std::uint64_t base_seed,
                               std::size_t workers) {
  if (trials < 100) throw ContractError("validate_theorem: need at least 100 trials");
  p.validate();
  TheoremReport r;
  r.trials = trials;
  r.base_seed = base_seed;
  r.outcomes.resize(trials);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < trials; t = next++) r.outcomes[t] = run_concentration_trial(p, base_seed + t);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::max<std::size_t>(1, workers); ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  r.separation_floor = (1.0 - 2.0 / p.beta) * p.min_sep;
  for (const auto& o : r.outcomes) {
    if (!o.concentration_holds) {
      ++r.concentration_violations;
      continue;
    }
    ++r.holding_trials;
    if (o.interior_correct != o.interior_points) ++r.interior_violations;
    if (o.min_separation < r.separation_floor) ++r.separation_violations;
  }
  r.concentration_rate = static_cast<double>(r.concentration_violations) / static_cast<double>(trials);
  r.rate_threshold = p.delta + 2.0 * std::sqrt(p.delta * (1.0 - p.delta) / static_cast<double>(trials));
  r.pass = r.concentration_rate <= r.rate_threshold && r.interior_violations == 0 && r.separation_violations == 0;
  return r;
}

std::string theorem_report_json(const TheoremParams& p, const TheoremReport& r) {
  nlohmann::ordered_json j;
  j["params"] = {{"d", p.d},
                 {"K", p.k},
                 {"sigma", p.sigma},
                 {"delta", p.delta},
                 {"beta", p.beta},
                 {"min_sep", p.min_sep},
                 {"noise_scale", p.noise_scale},
                 {"noise", p.noise == NoiseModel::kGaussian ? "gaussian" : "uniform"},
                 {"samples", p.samples}};
  j["trials"] = r.trials;
  j["base_seed"] = r.base_seed;
  j["concentration_violation_rate"] = r.concentration_rate;
  j["concentration_rate_threshold"] = r.rate_threshold;
  j["holding_trials"] = r.holding_trials;
  j["interior_violations"] = r.interior_violations;
  j["separation_violations"] = r.separation_violations;
  j["separation_floor"] = r.separation_floor;
  j["pass"] = r.pass;
  auto& per = j["per_trial"] = nlohmann::ordered_json::array();
  for (const auto& o : r.outcomes) {
    per.push_back({{"max_deviation", *std::max_element(o.deviations.begin(), o.deviations.end())},
                   {"concentration_holds", o.concentration_holds},
                   {"interior_fraction", o.interior_fraction()},
                   {"min_separation", o.min_separation}});
  }
  return j.dump(2) + "\n";
}

std::string theorem_deviations_csv(const TheoremReport& r) {
  std::ostringstream os;
  os << "trial,cluster,deviation,epsilon,normalized_deviation\n";
  for (std::size_t t = 0; t < r.outcomes.size(); ++t) {
    const auto& o = r.outcomes[t];
    for (std::size_t c = 0; c < o.deviations.size(); ++c) {
      os << t << ',' << c << ',' << format_double(o.deviations[c]) << ',' << format_double(o.epsilons[c]) << ','
         << format_double(o.normalized_deviations[c]) << '\n';
    }
  }
  return os.str();
}

Matrix fit_unit_prototypes(const Matrix& z, const Matrix& q, const Matrix& init, std::size_t max_iters) {
  if (q.rows() != z.rows() || init.rows() != q.cols() || init.cols() != z.cols()) {
    throw ContractError("fit_unit_prototypes: shape mismatch");
  }
  const Matrix sums = matmul(transpose(q), z);  // k × d
  Matrix y = init;
  for (std::size_t k = 0; k < y.rows(); ++k) {
    auto yk = y.row(k);
    const auto sk = sums.row(k);
    const double sn = l2_norm(sk);
    const double yn = l2_norm(yk);
    if (yn == 0.0) throw ContractError("fit_unit_prototypes: zero initial prototype");
    for (double& v : yk) v /= yn;
    if (sn <= 1e-12) continue;  // objective is flat for this prototype
    const double step = 0.5 / sn;
    for (std::size_t it = 0; it < max_iters; ++it) {
      const double along = dot(sk, yk);
      // The tangent residual resolves angles far below what 1 - cos can.
      double tangent = 0.0;
      for (std::size_t j = 0; j < yk.size(); ++j) tangent += (sk[j] - along * yk[j]) * (sk[j] - along * yk[j]);
      if (along > 0.0 && std::sqrt(tangent) <= 1e-13 * sn) break;
      // Riemannian ascent step on the sphere, then retraction.
      for (std::size_t j = 0; j < yk.size(); ++j) yk[j] += step * (sk[j] - along * yk[j]);
      const double n = l2_norm(yk);
      for (double& v : yk) v /= n;
    }
  }
  return y;
}

std::vector<double> stationarity_cosines(const Matrix& z, const Matrix& q, const Matrix& y) {
  const Matrix sums = matmul(transpose(q), z);
  std::vector<double> out;
  for (std::size_t k = 0; k < y.rows(); ++k) {
    const double sn = l2_norm(sums.row(k));
    if (sn <= 1e-12) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.push_back(dot(sums.row(k), y.row(k)) / (sn * l2_norm(y.row(k))));
  }
  return out;
}

StationarityReport validate_stationarity(std::size_t trials, std::uint64_t seed) {
  if (trials < 10) throw ContractError("validate_stationarity: need at least 10 trials");
  constexpr std::size_t kDim = 5, kProtos = 3, kPoints = 30;
  StationarityReport r;
  r.trials = trials;
  std::size_t ok_trials = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix z(kPoints, kDim), q(kPoints, kProtos), init(kProtos, kDim);
    for (double& v : z.values()) v = gauss(rng);
    for (double& v : q.values()) v = unif(rng);
    for (double& v : init.values()) v = gauss(rng);
    const Matrix y = fit_unit_prototypes(z, q, init);
    bool ok = true;
    for (double c : stationarity_cosines(z, q, y)) {
      if (std::isnan(c)) {
        ++r.degenerate;
        continue;
      }
      r.min_cosine = std::min(r.min_cosine, c);
      ok = ok && c >= 1.0 - 1e-6;
    }
    ok_trials += ok;
  }
  r.converged = ok_trials;
  r.pass = ok_trials == trials;
  return r;
}

}  // namespace plgc
