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

#include "plgc/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/rng.hpp"
#include "plgc/tape.hpp"

namespace plgc {

namespace {

Matrix one_hot_rows(std::span<const int> labels, std::span<const std::size_t> idx, std::size_t c) {
  Matrix y(idx.size(), c);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const int label = labels[idx[r]];
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw ContractError("node " + std::to_string(idx[r]) + " has no usable label");
    }
    y(r, static_cast<std::size_t>(label)) = 1.0;
  }
  return y;
}

// logits = X·W + 1·b on the tape.
Tape::Var affine(Tape& tape, Tape::Var x, Tape::Var w, Tape::Var b, std::size_t rows) {
  return tape.add(tape.matmul(x, w), tape.matmul(tape.constant(Matrix(rows, 1, 1.0)), b));
}

void descend(Matrix& p, const Matrix& g, double lr) {
  auto dst = p.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= lr * src[i];
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void check_binary(std::span<const double> scores, std::span<const int> labels, std::size_t& pos,
                  std::size_t& neg) {
  if (scores.size() != labels.size()) throw ContractError("auroc: scores/labels length mismatch");
  pos = neg = 0;
  for (int y : labels) {
    if (y == 1) ++pos;
    else if (y == 0) ++neg;
    else throw ContractError("auroc: labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) throw ContractError("auroc: need at least one positive and one negative");
}

}  // namespace

std::vector<std::size_t> sample_few_shot(std::span<const int> labels, std::size_t n_per_class,
                                         std::size_t num_classes, std::uint64_t seed,
                                         const std::vector<bool>& eligible) {
  if (n_per_class == 0) throw ContractError("sample_few_shot: n_per_class must be >= 1");
  if (!eligible.empty() && eligible.size() != labels.size()) {
    throw ContractError("sample_few_shot: eligibility mask length mismatch");
  }
  std::vector<std::vector<std::size_t>> pools(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnlabeled || (!eligible.empty() && !eligible[i])) continue;
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= num_classes) throw ContractError("sample_few_shot: label out of range");
    pools[y].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& pool = pools[c];
    if (pool.empty()) throw ContractError("sample_few_shot: class " + std::to_string(c) + " has no labeled nodes");
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t take = std::min(n_per_class, pool.size());
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t infer_num_classes(const Graph& g) {
  if (g.num_classes) return *g.num_classes;
  int top = -1;
  for (int y : g.labels) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1);
}

void save_head(const HeadParams& h, const std::filesystem::path& dir) {
  save_matrix_tsv(h.weight, dir / "weight.tsv");
  save_matrix_tsv(h.bias, dir / "bias.tsv");
}

HeadParams load_head(const std::filesystem::path& dir) {
  HeadParams h{load_matrix_tsv(dir / "weight.tsv"), load_matrix_tsv(dir / "bias.tsv")};
  if (h.bias.rows() != 1 || h.bias.cols() != h.weight.cols()) {
    throw ParseError((dir / "bias.tsv").string(), 1, "bias must be one row with one entry per head output");
  }
  return h;
}

HeadParams init_head(std::size_t embed_dim, std::size_t outputs, std::uint64_t seed) {
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(embed_dim + outputs));
  std::uniform_real_distribution<double> u(-limit, limit);
  HeadParams h{Matrix(embed_dim, outputs), Matrix(1, outputs)};
  for (double& v : h.weight.values()) v = u(rng);
  return h;
}

HeadParams train_node_head(const Matrix& embeddings, std::span<const int> labels,
                           std::span<const std::size_t> train_idx, std::size_t num_classes,
                           const HeadConfig& cfg) {
  return train_node_head(embeddings, labels, train_idx, cfg, init_head(embeddings.cols(), num_classes, cfg.seed));
}

HeadParams train_node_head(const Matrix& embeddings, std::span<const int> labels,
                           std::span<const std::size_t> train_idx, const HeadConfig& cfg, HeadParams head) {
  if (head.weight.rows() != embeddings.cols()) throw ContractError("train_node_head: head/embedding dim mismatch");
  if (train_idx.empty() || cfg.epochs == 0) return head;
  const Matrix x = gather_rows(embeddings, train_idx);
  const Matrix y = one_hot_rows(labels, train_idx, head.weight.cols());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    const auto w = tape.input(head.weight);
    const auto b = tape.input(head.bias);
    const auto loss = tape.softmax_cross_entropy(affine(tape, tape.constant(x), w, b, x.rows()), y);
    tape.backward(loss);
    descend(head.weight, tape.grad(w), cfg.lr);
    descend(head.bias, tape.grad(b), cfg.lr);
  }
  return head;
}

HeadParams finetune_node_head(const EncoderParams& backbone, const Graph& g,
                              std::span<const std::size_t> train_idx, const HeadConfig& cfg) {
  const Matrix z = encode(backbone, normalize_adjacency(g), g.features);
  return train_node_head(z, g.labels, train_idx, infer_num_classes(g), cfg);
}

Matrix head_logits(const Matrix& embeddings, const HeadParams& head) {
  Matrix out = matmul(embeddings, head.weight);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += head.bias(0, c);
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const Matrix& logits) {
  std::vector<std::size_t> out(logits.rows(), 0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, out[r])) out[r] = c;
    }
  }
  return out;
}

std::string EvalReport::to_json_line() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["metric"] = metric;
  j["value"] = value;
  j["n_eval"] = n_eval;
  j["seed"] = seed;
  if (!method.empty()) j["method"] = method;
  if (!config.empty()) j["config"] = nlohmann::ordered_json::parse(config);
  return j.dump();
}

double node_accuracy(const Matrix& embeddings, const HeadParams& head, std::span<const int> labels,
                     std::span<const std::size_t> test_idx) {
  if (test_idx.empty()) throw ContractError("evaluate_node: empty test set");
  const auto pred = argmax_rows(head_logits(gather_rows(embeddings, test_idx), head));
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test_idx.size(); ++r) {
    const int y = labels[test_idx[r]];
    if (y == kUnlabeled) throw ContractError("evaluate_node: test node without label");
    if (pred[r] == static_cast<std::size_t>(y)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_idx.size());
}

EvalReport evaluate_node(const EncoderParams& backbone, const HeadParams& head, const Graph& g,
                         std::span<const std::size_t> test_idx) {
  if (test_idx.empty()) throw ContractError("evaluate_node: empty test set");
  const Matrix z = encode(backbone, normalize_adjacency(g), g.features);
  EvalReport r;
  r.task = "node";
  r.metric = "accuracy";
  r.value = node_accuracy(z, head, g.labels, test_idx);
  r.n_eval = test_idx.size();
  return r;
}

Matrix pair_features(const Matrix& embeddings, std::span<const Edge> pairs) {
  Matrix h(pairs.size(), embeddings.cols());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    auto a = embeddings.row(pairs[r].u);
    auto b = embeddings.row(pairs[r].v);
    auto dst = h.row(r);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = a[j] * b[j];
  }
  return h;
}

HeadParams finetune_link_head(const EncoderParams& backbone, const Graph& g, const EdgeSplit& split,
                              const HeadConfig& cfg) {
  const Graph observed = with_edges(g, split.train_edges);
  const Matrix z = encode(backbone, normalize_adjacency(observed), observed.features);
  HeadParams head = init_head(z.cols(), 1, cfg.seed);

  std::vector<Edge> pairs = split.train_edges;
  pairs.insert(pairs.end(), split.train_negatives.begin(), split.train_negatives.end());
  std::vector<double> y(pairs.size(), 0.0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(split.train_edges.size()), 1.0);
  if (pairs.empty()) return head;
  const Matrix h = pair_features(z, pairs);
  const double n = static_cast<double>(pairs.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix gw(h.cols(), 1);
    double gb = 0.0;
    for (std::size_t r = 0; r < h.rows(); ++r) {
      const double residual = (sigmoid(dot(h.row(r), head.weight.values()) + head.bias(0, 0)) - y[r]) / n;
      gb += residual;
      for (std::size_t j = 0; j < h.cols(); ++j) gw(j, 0) += residual * h(r, j);
    }
    descend(head.weight, gw, cfg.lr);
    head.bias(0, 0) -= cfg.lr * gb;
  }
  return head;
}

std::vector<double> link_scores(const Matrix& embeddings, const HeadParams& head, std::span<const Edge> pairs) {
  const Matrix h = pair_features(embeddings, pairs);
  std::vector<double> s(pairs.size());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    s[r] = sigmoid(dot(h.row(r), head.weight.values()) + head.bias(0, 0));
  }
  return s;
}

EvalReport evaluate_link(const EncoderParams& backbone, const HeadParams& head, const Graph& g,
                         const EdgeSplit& split) {
  const Graph observed = with_edges(g, split.train_edges);
  const Matrix z = encode(backbone, normalize_adjacency(observed), observed.features);
  std::vector<Edge> pairs = split.test_edges;
  pairs.insert(pairs.end(), split.test_negatives.begin(), split.test_negatives.end());
  std::vector<int> y(pairs.size(), 0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(split.test_edges.size()), 1);
  EvalReport r;
  r.task = "link";
  r.metric = "auroc";
  r.value = auroc(link_scores(z, head, pairs), y);
  r.n_eval = pairs.size();
  return r;
}

double auroc_pairwise(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  // Count in half-units so the numerator stays an exact integer.
  std::uint64_t halves = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) halves += 2;
      else if (scores[i] == scores[j]) halves += 1;
    }
  }
  return static_cast<double>(halves) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double auroc_rank_sum(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Doubled midranks: tie group occupying ranks [i+1, j] gets 2·midrank = i+1+j.
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    std::size_t pos_in_group = 0;
    for (std::size_t k = i; k < j; ++k) pos_in_group += labels[order[k]] == 1;
    doubled_rank_sum += pos_in_group * (i + 1 + j);
    i = j;
  }
  const std::uint64_t halves = doubled_rank_sum - pos * (pos + 1);
  return static_cast<double>(halves) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  return scores.size() <= 10000 ? auroc_pairwise(scores, labels) : auroc_rank_sum(scores, labels);
}

EncoderParams train_supervised_encoder(const Graph& g, std::span<const std::size_t> train_idx,
                                       const SupervisedConfig& cfg) {
  const std::size_t c = infer_num_classes(g);
  EncoderParams enc = init_encoder(g.feature_dim(), cfg.encoder);
  HeadParams head = init_head(enc.embed_dim(), c, derive_seed(cfg.encoder.seed, 1));
  const NormalizedAdjacency adj = normalize_adjacency(g);
  const Matrix y = one_hot_rows(g.labels, train_idx, c);
  const std::vector<std::size_t> idx(train_idx.begin(), train_idx.end());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    const EncoderVars vars = track(tape, enc);
    const auto w = tape.input(head.weight);
    const auto b = tape.input(head.bias);
    const auto z = tape.gather_rows(encode(tape, vars, adj, tape.constant(g.features)), idx);
    const auto loss = tape.softmax_cross_entropy(affine(tape, z, w, b, idx.size()), y);
    tape.backward(loss);
    descend(enc.w1, tape.grad(vars.w1), cfg.lr);
    descend(enc.w2, tape.grad(vars.w2), cfg.lr);
    descend(head.weight, tape.grad(w), cfg.lr);
    descend(head.bias, tape.grad(b), cfg.lr);
  }
  return enc;
}

}  // namespace plgc
