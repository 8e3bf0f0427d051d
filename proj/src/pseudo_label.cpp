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

#include "plgc/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/log.hpp"
#include "plgc/rng.hpp"

namespace plgc {

PrototypeBank init_bank(std::size_t k, std::size_t dim, std::uint64_t seed) {
  if (k == 0 || dim == 0) throw ContractError("init_bank: K and dim must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(k, dim);
  for (double& v : m.values()) v = normal(rng);
  return normalize_bank(PrototypeBank{std::move(m)});
}

PrototypeBank seed_bank_from_embeddings(const Matrix& z, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > z.rows()) throw ContractError("seed_bank_from_embeddings: need 1 <= K <= rows");
  Rng rng(seed);
  std::vector<std::size_t> picked{std::uniform_int_distribution<std::size_t>(0, z.rows() - 1)(rng)};
  // closest[i] = highest cosine between node i and any picked row.
  std::vector<double> closest(z.rows(), -std::numeric_limits<double>::infinity());
  while (picked.size() < k) {
    const auto last = z.row(picked.back());
    for (std::size_t i = 0; i < z.rows(); ++i) closest[i] = std::max(closest[i], dot(z.row(i), last));
    picked.push_back(static_cast<std::size_t>(std::min_element(closest.begin(), closest.end()) - closest.begin()));
  }
  return normalize_bank(PrototypeBank{gather_rows(z, picked)});
}

PrototypeBank normalize_bank(PrototypeBank bank) {
  bank.protos = row_l2_normalize(bank.protos);
  return bank;
}

Matrix HardAssignment::one_hot() const {
  Matrix m(index.size(), num_prototypes);
  for (std::size_t i = 0; i < index.size(); ++i) m(i, index[i]) = 1.0;
  return m;
}

std::vector<std::size_t> HardAssignment::counts() const {
  std::vector<std::size_t> c(num_prototypes, 0);
  for (std::size_t k : index) ++c[k];
  return c;
}

namespace {

// Row-normalized plan for column potentials v: rows sum to exactly 1/B.
void plan_for_potentials(const Matrix& scores, const std::vector<double>& v, double epsilon, Matrix& q) {
  const double row_target = 1.0 / static_cast<double>(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto s = scores.row(i);
    auto r = q.row(i);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.size(); ++j) top = std::max(top, (s[j] + v[j]) / epsilon);
    double total = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      r[j] = std::exp((s[j] + v[j]) / epsilon - top);
      total += r[j];
    }
    const double f = row_target / total;
    for (double& x : r) x *= f;
  }
}

// Concave dual whose maximizer balances the columns.
double column_dual(const Matrix& scores, const std::vector<double>& v, double epsilon) {
  const double col_target = 1.0 / static_cast<double>(scores.cols());
  const double row_target = 1.0 / static_cast<double>(scores.rows());
  double value = 0.0;
  for (double x : v) value += col_target * x;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto s = scores.row(i);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.size(); ++j) top = std::max(top, (s[j] + v[j]) / epsilon);
    double total = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) total += std::exp((s[j] + v[j]) / epsilon - top);
    value -= epsilon * row_target * (top + std::log(total));
  }
  return value;
}

}  // namespace

SoftAssignment sinkhorn_from_scores(const Matrix& scores, double epsilon, std::size_t iters) {
  if (!(epsilon > 0.0)) throw ContractError("sinkhorn: epsilon must be > 0");
  if (iters == 0) throw ContractError("sinkhorn: iters must be >= 1");
  const std::size_t b = scores.rows();
  const std::size_t k = scores.cols();
  if (b == 0 || k == 0) throw ContractError("sinkhorn: empty score matrix");
  if (b < k) spdlog::warn("sinkhorn: batch of {} nodes is smaller than K = {}", b, k);
  for (double x : scores.values()) {
    if (!std::isfinite(std::exp(x / epsilon))) {
      throw NumericError("sinkhorn: exp(score/epsilon) overflowed; use a larger epsilon than " +
                         format_double(epsilon));
    }
  }

  const double col_target = 1.0 / static_cast<double>(k);
  const double row_weight = static_cast<double>(b);
  // Largest per-sweep change of a column's log-scaling, in units of epsilon.
  constexpr double kMaxLogStep = 2.0;
  std::vector<double> v(k, 0.0), trial(k);
  Matrix q(b, k);
  Eigen::MatrixXd hessian(k, k);
  Eigen::VectorXd residual(k);
  for (std::size_t t = 0; t < iters; ++t) {
    plan_for_potentials(scores, v, epsilon, q);
    // Each sweep rescales columns by exp(step/epsilon), then rows exactly. The
    // column factors come from a Newton step on the dual rather than the plain
    // ratio, which stalls when epsilon is small relative to the score range.
    hessian.setZero();
    residual.setConstant(col_target);
    for (std::size_t i = 0; i < b; ++i) {
      const auto r = q.row(i);
      for (std::size_t j = 0; j < k; ++j) {
        residual(static_cast<Eigen::Index>(j)) -= r[j];
        hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += r[j];
        for (std::size_t l = 0; l < k; ++l) {
          hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) -= row_weight * r[j] * r[l];
        }
      }
    }
    if (!residual.allFinite()) {
      throw NumericError("sinkhorn: marginals became non-finite; use a larger epsilon than " +
                         format_double(epsilon));
    }
    if (residual.lpNorm<Eigen::Infinity>() <= 1e-15) break;
    hessian /= epsilon;
    // The dual is flat along the all-ones direction; a tiny ridge fixes it.
    hessian.diagonal().array() += 1e-12 * std::max(hessian.trace(), 1e-300);
    Eigen::VectorXd step = hessian.ldlt().solve(residual);
    step.array() -= step.mean();
    const double largest = step.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(largest)) break;
    if (largest > kMaxLogStep * epsilon) step *= kMaxLogStep * epsilon / largest;
    const double slope = residual.dot(step);
    if (!(slope > 0.0)) break;
    const double base = column_dual(scores, v, epsilon);
    bool moved = false;
    for (double scale = 1.0; scale > 1e-10; scale *= 0.5) {
      for (std::size_t j = 0; j < k; ++j) trial[j] = v[j] + scale * step(static_cast<Eigen::Index>(j));
      if (column_dual(scores, trial, epsilon) >= base + 1e-4 * scale * slope) {
        v = trial;
        moved = true;
        break;
      }
    }
    if (!moved) break;  // at the floating-point floor
  }
  plan_for_potentials(scores, v, epsilon, q);
  return SoftAssignment{std::move(q)};
}

SoftAssignment sinkhorn_assign(const Matrix& z, const PrototypeBank& bank, const SinkhornConfig& cfg) {
  if (z.cols() != bank.dim()) throw ContractError("sinkhorn_assign: embedding and prototype dims differ");
  return sinkhorn_from_scores(matmul(z, transpose(bank.protos)), cfg.epsilon, cfg.iters);
}

HardAssignment round_assignment(const SoftAssignment& q) {
  HardAssignment h;
  h.num_prototypes = q.plan.cols();
  h.index.resize(q.plan.rows());
  for (std::size_t i = 0; i < q.plan.rows(); ++i) {
    auto r = q.plan.row(i);
    h.index[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return h;
}

Tape::Var swapped_loss(Tape& tape, Tape::Var z, const HardAssignment& q, Tape::Var bank, double tau) {
  if (!(tau > 0.0)) throw ContractError("swapped_loss: tau must be > 0");
  if (tape.value(z).rows() != q.rows()) throw ContractError("swapped_loss: row counts differ");
  if (tape.value(bank).rows() != q.num_prototypes) {
    throw ContractError("swapped_loss: assignment width differs from prototype count");
  }
  auto logits = tape.scale(tape.matmul(z, tape.transpose(bank)), 1.0 / tau);
  return tape.softmax_cross_entropy(logits, q.one_hot());
}

SwappedLoss swapped_loss(const Matrix& z, const HardAssignment& q, const PrototypeBank& bank, double tau) {
  Tape tape;
  auto zv = tape.input(z);
  auto bv = tape.input(bank.protos);
  auto loss = swapped_loss(tape, zv, q, bv, tau);
  tape.backward(loss);
  return SwappedLoss{tape.scalar(loss), tape.grad(zv), tape.grad(bv)};
}

std::size_t fill_empty_prototypes(HardAssignment& hard, const SoftAssignment& soft) {
  auto counts = hard.counts();
  std::size_t fixed = 0;
  for (std::size_t k = 0; k < hard.num_prototypes; ++k) {
    if (counts[k] > 0) continue;
    std::vector<std::size_t> order(hard.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return soft.plan(a, k) > soft.plan(b, k);
    });
    bool done = false;
    for (std::size_t i : order) {
      if (counts[hard.index[i]] > 1) {
        --counts[hard.index[i]];
        hard.index[i] = k;
        ++counts[k];
        done = true;
        break;
      }
    }
    if (!done) throw NumericError("prototype " + std::to_string(k) + " has no assignable node");
    ++fixed;
  }
  return fixed;
}

namespace {

void gradient_step(Matrix& w, const Matrix& g, double lr) {
  auto wv = w.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= lr * gv[i];
}

std::vector<std::size_t> sample_batch(std::size_t n, std::size_t size, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

PseudoLabelResult train_pseudo_labels(const Graph& g, const PseudoLabelConfig& cfg) {
  const std::size_t n = g.num_nodes;
  const std::size_t k = cfg.num_prototypes;
  if (k == 0 || k > n) throw ContractError("train_pseudo_labels: need 1 <= K <= N");

  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.seed = derive_seed(cfg.seed, 10);
  PseudoLabelResult result;
  result.encoder = init_encoder(g.feature_dim(), enc_cfg);
  result.bank = seed_bank_from_embeddings(encode(result.encoder, normalize_adjacency(g), g.features), k,
                                          derive_seed(cfg.seed, 11));

  const bool full_batch = n <= cfg.full_batch_limit;
  const std::size_t batch = full_batch ? n : std::max(k, (std::min(cfg.sinkhorn.batch_size, n) / k) * k);
  Rng batch_rng(derive_seed(cfg.seed, 12));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Graph view_a = augment(g, cfg.edge_drop, cfg.feature_mask, derive_seed(cfg.seed, 1000 + 2 * epoch));
    const Graph view_b = augment(g, cfg.edge_drop, cfg.feature_mask, derive_seed(cfg.seed, 1001 + 2 * epoch));

    Tape tape;
    const EncoderVars params = track(tape, result.encoder);
    const auto bank = tape.input(result.bank.protos);
    auto z_a = encode(tape, params, normalize_adjacency(view_a), tape.constant(view_a.features));
    auto z_b = encode(tape, params, normalize_adjacency(view_b), tape.constant(view_b.features));
    if (!full_batch) {
      auto rows = sample_batch(n, batch, batch_rng);
      z_a = tape.gather_rows(z_a, rows);
      z_b = tape.gather_rows(z_b, std::move(rows));
    }
    const HardAssignment q_a = round_assignment(sinkhorn_assign(tape.value(z_a), result.bank, cfg.sinkhorn));
    const HardAssignment q_b = round_assignment(sinkhorn_assign(tape.value(z_b), result.bank, cfg.sinkhorn));

    auto loss = tape.add(swapped_loss(tape, z_a, q_b, bank, cfg.tau), swapped_loss(tape, z_b, q_a, bank, cfg.tau));
    const double value = tape.scalar(loss);
    if (!std::isfinite(value)) throw NumericError("train_pseudo_labels: loss is not finite");
    result.loss_history.push_back(value);
    tape.backward(loss);

    gradient_step(result.encoder.w1, tape.grad(params.w1), cfg.lr_encoder);
    gradient_step(result.encoder.w2, tape.grad(params.w2), cfg.lr_encoder);
    gradient_step(result.bank.protos, tape.grad(bank), cfg.lr_bank);
    result.bank = normalize_bank(std::move(result.bank));
    spdlog::debug("pseudo-label epoch {} loss {}", epoch, value);
  }

  const Matrix z = encode(result.encoder, normalize_adjacency(g), g.features);
  SinkhornConfig full = cfg.sinkhorn;
  full.batch_size = n;
  const SoftAssignment soft = sinkhorn_assign(z, result.bank, full);
  result.q_full = round_assignment(soft);
  result.remediated = fill_empty_prototypes(result.q_full, soft);
  if (result.remediated > 0) {
    spdlog::info("filled {} empty prototype(s) after final assignment", result.remediated);
  }
  return result;
}

void save_pseudo_labels(const PseudoLabelResult& r, const std::filesystem::path& dir) {
  save_matrix_tsv(r.bank.protos, dir / "prototypes.tsv");
  std::string assign;
  for (std::size_t k : r.q_full.index) assign += std::to_string(k) + "\n";
  write_file_atomic(dir / "assignments.tsv", assign);
  std::string loss;
  for (double v : r.loss_history) loss += format_double(v) + "\n";
  write_file_atomic(dir / "loss.tsv", loss);
  save_encoder(r.encoder, dir / "encoder");
}

PseudoLabelResult load_pseudo_labels(const std::filesystem::path& dir) {
  PseudoLabelResult r;
  r.bank.protos = load_matrix_tsv(dir / "prototypes.tsv");
  r.encoder = load_encoder(dir / "encoder");
  r.q_full.num_prototypes = r.bank.size();
  const std::string file = (dir / "assignments.tsv").string();
  std::istringstream in(read_file(dir / "assignments.tsv"));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(line, &pos);
    } catch (const std::exception&) {
      throw ParseError(file, line_no, "expected a prototype index");
    }
    if (v >= r.q_full.num_prototypes) throw ParseError(file, line_no, "prototype index out of range");
    r.q_full.index.push_back(v);
  }
  if (std::filesystem::exists(dir / "loss.tsv")) {
    const Matrix loss = load_matrix_tsv(dir / "loss.tsv");
    r.loss_history.assign(loss.values().begin(), loss.values().end());
  }
  return r;
}

}  // namespace plgc
