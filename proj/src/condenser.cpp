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

#include "plgc/condenser.hpp"

#include <cmath>
#include <functional>
#include <optional>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/log.hpp"
#include "plgc/tape.hpp"

namespace plgc {

namespace {

using Params = std::vector<Matrix>;

struct Evaluation {
  double loss = 0.0;
  Params grads;
};

// Returns nullopt when the forward pass hits a degenerate embedding row.
using Objective = std::function<std::optional<Evaluation>(const Params&, bool with_grad)>;

struct DescentTrace {
  std::vector<double> history;
  double final_loss = 0.0;
};

// Gradient descent with per-step backtracking: halve the rate until the loss
// does not increase, reset it on the next step.
DescentTrace backtracking_descent(Params& params, const Objective& objective, std::size_t steps,
                                  double lr, std::size_t max_halvings, const char* what) {
  auto current = objective(params, true);
  if (!current || !std::isfinite(current->loss)) {
    throw NumericError(std::string(what) + ": initial loss is not finite; try a smaller learning rate");
  }
  DescentTrace trace;
  for (std::size_t step = 0; step < steps; ++step) {
    trace.history.push_back(current->loss);
    double rate = lr;
    bool moved = false;
    for (std::size_t h = 0; h <= max_halvings; ++h, rate *= 0.5) {
      Params candidate = params;
      for (std::size_t p = 0; p < candidate.size(); ++p) {
        auto dst = candidate[p].values();
        auto g = current->grads[p].values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= rate * g[i];
      }
      auto trial = objective(candidate, false);
      if (trial && std::isfinite(trial->loss) && trial->loss <= current->loss) {
        params = std::move(candidate);
        moved = true;
        break;
      }
    }
    if (!moved) break;  // no decrease at any rate: stationary to working precision
    current = objective(params, true);
    if (!current || !std::isfinite(current->loss)) {
      throw NumericError(std::string(what) + ": loss diverged; try a smaller learning rate");
    }
  }
  trace.final_loss = current->loss;
  return trace;
}

std::size_t class_count(const Graph& g, std::span<const int> labels) {
  if (g.num_classes) return *g.num_classes;
  int top = -1;
  for (int y : labels) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1);
}

}  // namespace

Matrix init_condensed(const Graph& g, const HardAssignment& q, std::size_t k) {
  if (q.rows() != g.num_nodes) throw ContractError("init_condensed: assignment rows != num_nodes");
  // Running means: identical rows average to themselves bit for bit.
  Matrix means(k, g.feature_dim());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    const std::size_t c = q.index[i];
    if (c >= k) throw ContractError("init_condensed: prototype index out of range");
    const double n = static_cast<double>(++counts[c]);
    auto dst = means.row(c);
    auto src = g.features.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += (src[j] - dst[j]) / n;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) throw ContractError("init_condensed: prototype " + std::to_string(c) + " is empty");
  }
  return means;
}

double condensation_loss(const EncoderParams& encoder, const PrototypeBank& bank, const Matrix& x) {
  const Matrix z = encode(encoder, identity_adjacency(x.rows()), x);
  double s = 0.0;
  for (std::size_t k = 0; k < z.rows(); ++k) s += squared_distance(z.row(k), bank.protos.row(k));
  return s;
}

CondensedGraph condense(const Matrix& init, const EncoderParams& encoder, const PrototypeBank& bank,
                        const CondenseConfig& cfg, std::string source_id) {
  if (encoder.embed_dim() != bank.dim()) throw ContractError("condense: encoder embed_dim != prototype dim");
  if (init.rows() != bank.size()) throw ContractError("condense: need one synthetic row per prototype");
  if (init.cols() != encoder.input_dim()) throw ContractError("condense: feature dim != encoder input dim");

  const NormalizedAdjacency eye = identity_adjacency(init.rows());
  Objective objective = [&](const Params& p, bool with_grad) -> std::optional<Evaluation> {
    Tape tape;
    const EncoderVars vars{tape.constant(encoder.w1), tape.constant(encoder.w2)};
    const auto x = tape.input(p[0]);
    Tape::Var loss;
    try {
      loss = tape.squared_error(encode(tape, vars, eye, x), bank.protos);
    } catch (const DegenerateError&) {
      return std::nullopt;
    }
    Evaluation e{tape.scalar(loss), {}};
    if (with_grad) {
      tape.backward(loss);
      e.grads.push_back(tape.grad(x));
    }
    return e;
  };

  Params params{init};
  auto trace = backtracking_descent(params, objective, cfg.steps, cfg.lr, cfg.max_halvings, "condense");
  CondensedGraph out;
  out.features = std::move(params[0]);
  out.bank = bank;
  out.source_id = std::move(source_id);
  out.final_loss = trace.final_loss;
  out.loss_history = std::move(trace.history);
  return out;
}

double backbone_loss(const EncoderParams& params, std::span<const CondensedGraph> sets) {
  double s = 0.0;
  for (const auto& c : sets) s += condensation_loss(params, c.bank, c.features);
  return s;
}

BackboneResult reconstruct_backbone(std::span<const CondensedGraph> sets, const EncoderConfig& enc_cfg,
                                    std::size_t epochs, double lr, std::uint64_t seed) {
  if (sets.empty()) throw ContractError("reconstruct_backbone: no condensed sets");
  const std::size_t d = sets[0].features.cols();
  const std::size_t e = sets[0].bank.dim();
  for (const auto& c : sets) {
    if (c.features.cols() != d || c.bank.dim() != e || c.features.rows() != c.bank.size()) {
      throw ContractError("reconstruct_backbone: condensed sets disagree on dimensions");
    }
  }
  EncoderConfig cfg = enc_cfg;
  cfg.embed_dim = e;
  cfg.seed = seed;
  BackboneResult result;
  result.params = init_encoder(d, cfg);

  std::vector<NormalizedAdjacency> eyes;
  for (const auto& c : sets) eyes.push_back(identity_adjacency(c.features.rows()));

  Objective objective = [&](const Params& p, bool with_grad) -> std::optional<Evaluation> {
    Tape tape;
    const EncoderVars vars{tape.input(p[0]), tape.input(p[1])};
    std::optional<Tape::Var> total;
    try {
      for (std::size_t s = 0; s < sets.size(); ++s) {
        auto z = encode(tape, vars, eyes[s], tape.constant(sets[s].features));
        auto term = tape.squared_error(z, sets[s].bank.protos);
        total = total ? tape.add(*total, term) : term;
      }
    } catch (const DegenerateError&) {
      return std::nullopt;
    }
    Evaluation ev{tape.scalar(*total), {}};
    if (with_grad) {
      tape.backward(*total);
      ev.grads = {tape.grad(vars.w1), tape.grad(vars.w2)};
    }
    return ev;
  };

  Params params{result.params.w1, result.params.w2};
  const double step = lr / static_cast<double>(sets.size());
  auto trace = backtracking_descent(params, objective, epochs, step, 40, "reconstruct_backbone");
  result.params.w1 = std::move(params[0]);
  result.params.w2 = std::move(params[1]);
  result.initial_loss = trace.history.empty() ? trace.final_loss : trace.history.front();
  result.final_loss = trace.final_loss;
  result.loss_history = std::move(trace.history);
  return result;
}

BaselineCondensed supervised_baseline_condense(const Graph& g, std::span<const int> labels,
                                               const EncoderParams& encoder, std::size_t per_class,
                                               const CondenseConfig& cfg) {
  if (labels.size() != g.num_nodes) throw ContractError("baseline: label count != num_nodes");
  if (per_class == 0) throw ContractError("baseline: per_class must be >= 1");
  const std::size_t c = class_count(g, labels);
  if (c == 0) throw ContractError("baseline: no labeled nodes");

  const Matrix z = encode(encoder, normalize_adjacency(g), g.features);
  const std::size_t d = g.feature_dim();
  const std::size_t e = encoder.embed_dim();
  Matrix class_means(c, e);
  Matrix feature_means(c, d);
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (labels[i] == kUnlabeled) continue;
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= c) throw ContractError("baseline: label out of range");
    ++counts[y];
    for (std::size_t j = 0; j < e; ++j) class_means(y, j) += z(i, j);
    for (std::size_t j = 0; j < d; ++j) feature_means(y, j) += g.features(i, j);
  }
  for (std::size_t y = 0; y < c; ++y) {
    if (counts[y] == 0) throw ContractError("baseline: class " + std::to_string(y) + " has no labeled nodes");
    for (double& v : class_means.row(y)) v /= static_cast<double>(counts[y]);
    for (double& v : feature_means.row(y)) v /= static_cast<double>(counts[y]);
  }

  BaselineCondensed out;
  out.per_class = per_class;
  out.class_means = class_means;
  Matrix init(c * per_class, d);
  Matrix averaging(c, c * per_class);
  for (std::size_t r = 0; r < c * per_class; ++r) {
    const std::size_t y = r / per_class;
    out.labels.push_back(static_cast<int>(y));
    std::copy_n(feature_means.row(y).begin(), d, init.row(r).begin());
    averaging(y, r) = 1.0 / static_cast<double>(per_class);
  }

  const NormalizedAdjacency eye = identity_adjacency(init.rows());
  Objective objective = [&](const Params& p, bool with_grad) -> std::optional<Evaluation> {
    Tape tape;
    const EncoderVars vars{tape.constant(encoder.w1), tape.constant(encoder.w2)};
    const auto x = tape.input(p[0]);
    Tape::Var loss;
    try {
      auto means = tape.matmul(tape.constant(averaging), encode(tape, vars, eye, x));
      loss = tape.squared_error(means, class_means);
    } catch (const DegenerateError&) {
      return std::nullopt;
    }
    Evaluation ev{tape.scalar(loss), {}};
    if (with_grad) {
      tape.backward(loss);
      ev.grads.push_back(tape.grad(x));
    }
    return ev;
  };
  Params params{init};
  auto trace = backtracking_descent(params, objective, cfg.steps, cfg.lr, cfg.max_halvings, "baseline condense");
  out.features = std::move(params[0]);
  out.final_loss = trace.final_loss;
  out.loss_history = std::move(trace.history);
  return out;
}

CondensedGraph baseline_as_condensed(const BaselineCondensed& b, std::string source_id) {
  const Matrix targets = row_l2_normalize(b.class_means);
  CondensedGraph c;
  c.features = b.features;
  c.bank.protos = Matrix(b.features.rows(), targets.cols());
  for (std::size_t r = 0; r < b.labels.size(); ++r) {
    std::copy_n(targets.row(static_cast<std::size_t>(b.labels[r])).begin(), targets.cols(),
                c.bank.protos.row(r).begin());
  }
  c.source_id = std::move(source_id);
  c.final_loss = b.final_loss;
  return c;
}

void save_condensed(const CondensedGraph& c, const std::filesystem::path& dir) {
  save_matrix_tsv(c.features, dir / "features.tsv");
  save_matrix_tsv(c.bank.protos, dir / "prototypes.tsv");
  nlohmann::json meta = {{"K", c.features.rows()},
                         {"d", c.features.cols()},
                         {"embed_dim", c.bank.dim()},
                         {"source_id", c.source_id},
                         {"final_loss", c.final_loss}};
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

CondensedGraph load_condensed(const std::filesystem::path& dir) {
  CondensedGraph c;
  c.features = load_matrix_tsv(dir / "features.tsv");
  c.bank.protos = load_matrix_tsv(dir / "prototypes.tsv");
  const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  c.source_id = meta.at("source_id").get<std::string>();
  c.final_loss = meta.at("final_loss").get<double>();
  if (c.features.rows() != meta.at("K").get<std::size_t>() || c.bank.size() != c.features.rows()) {
    throw ParseError((dir / "meta.json").string(), 0, "K disagrees with features/prototypes");
  }
  return c;
}

}  // namespace plgc
