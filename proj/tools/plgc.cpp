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

// plgc: command-line driver for label-free graph condensation experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plgc/condenser.hpp"
#include "plgc/config.hpp"
#include "plgc/downstream.hpp"
#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/log.hpp"
#include "plgc/pipeline.hpp"
#include "plgc/pseudo_label.hpp"
#include "plgc/rng.hpp"
#include "plgc/sweep.hpp"
#include "plgc/theory.hpp"

namespace fs = std::filesystem;
using namespace plgc;

namespace {

struct Globals {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

ExperimentConfig experiment_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
  if (g.seed) c.seeds = {*g.seed};
  if (g.workers) c.workers = *g.workers;
  return c;
}

std::uint64_t single_seed(const Globals& g, const ExperimentConfig& c) { return g.seed ? *g.seed : c.seeds.front(); }

std::string index_lines(const std::vector<std::size_t>& idx) {
  std::string s;
  for (auto i : idx) s += std::to_string(i) + "\n";
  return s;
}

std::vector<std::size_t> read_index_lines(const fs::path& p) {
  std::vector<std::size_t> out;
  const Matrix m = load_matrix_tsv(p);
  for (double v : m.values()) out.push_back(static_cast<std::size_t>(v));
  return out;
}

int cmd_gen_sbm(const Globals& g) {
  const auto c = experiment_config(g);
  const Graph graph = generate_sbm(c.sbm, single_seed(g, c));
  save_graph(graph, g.out);
  std::printf("wrote %zu nodes, %zu edges to %s\n", graph.num_nodes, graph.edges.size(), g.out.c_str());
  return 0;
}

int cmd_pretrain(const Globals& g, const std::string& graph_dir, std::size_t k) {
  const auto c = experiment_config(g);
  const Graph graph = load_graph(graph_dir);
  PseudoLabelConfig pc = c.pretrain;
  pc.num_prototypes = k > 0 ? k : condensed_size(c.ratio, graph.num_nodes);
  pc.seed = single_seed(g, c);
  const auto r = train_pseudo_labels(graph, pc);
  save_pseudo_labels(r, g.out);
  std::printf("K=%zu final loss %s\n", pc.num_prototypes,
              r.loss_history.empty() ? "n/a" : format_double(r.loss_history.back()).c_str());
  return 0;
}

int cmd_condense(const Globals& g, const std::string& graph_dir, const std::string& pretrain_dir) {
  const auto c = experiment_config(g);
  const Graph graph = load_graph(graph_dir);
  const auto pl = load_pseudo_labels(pretrain_dir);
  const Matrix init = init_condensed(graph, pl.q_full, pl.bank.size());
  const auto cg = condense(init, pl.encoder, pl.bank, c.condense, fs::path(graph_dir).filename().string());
  save_condensed(cg, g.out);
  std::printf("condensed to %zu nodes, loss %s\n", cg.features.rows(), format_double(cg.final_loss).c_str());
  return 0;
}

int cmd_backbone(const Globals& g, const std::vector<std::string>& dirs) {
  const auto c = experiment_config(g);
  std::vector<CondensedGraph> sets;
  for (const auto& d : dirs) sets.push_back(load_condensed(d));
  const auto r = reconstruct_backbone(sets, c.pretrain.encoder, c.backbone_epochs, c.backbone_lr,
                                      derive_seed(single_seed(g, c), 30));
  save_encoder(r.params, g.out);
  std::printf("backbone loss %s -> %s\n", format_double(r.initial_loss).c_str(), format_double(r.final_loss).c_str());
  return 0;
}

int cmd_finetune(const Globals& g, const std::string& graph_dir, const std::string& backbone_dir) {
  const auto c = experiment_config(g);
  const std::uint64_t seed = single_seed(g, c);
  const Graph graph = load_graph(graph_dir);
  const auto backbone = load_encoder(backbone_dir);
  HeadConfig hc = c.head;
  hc.seed = derive_seed(seed, 41);
  if (c.task == Task::kLink) {
    const EdgeSplit split = split_edges(graph, derive_seed(seed, 50));
    save_head(finetune_link_head(backbone, graph, split, hc), g.out);
    return 0;
  }
  SeedData data;
  data.graph = graph;
  data.num_classes = infer_num_classes(graph);
  data.test_idx = split_test_nodes(graph, c.test_fraction, derive_seed(seed, 20));
  data.in_test.assign(graph.num_nodes, false);
  for (auto i : data.test_idx) data.in_test[i] = true;
  const auto train = finetune_nodes(c, data, graph.labels, seed);
  save_head(finetune_node_head(backbone, graph, train, hc), g.out);
  write_file_atomic(fs::path(g.out) / "train_nodes.tsv", index_lines(train));
  write_file_atomic(fs::path(g.out) / "test_nodes.tsv", index_lines(data.test_idx));
  std::printf("head trained on %zu nodes\n", train.size());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& graph_dir, const std::string& backbone_dir,
             const std::string& head_dir) {
  const auto c = experiment_config(g);
  const std::uint64_t seed = single_seed(g, c);
  const Graph graph = load_graph(graph_dir);
  const auto backbone = load_encoder(backbone_dir);
  const auto head = load_head(head_dir);
  EvalReport r;
  if (c.task == Task::kLink) {
    r = evaluate_link(backbone, head, graph, split_edges(graph, derive_seed(seed, 50)));
  } else {
    r = evaluate_node(backbone, head, graph, read_index_lines(fs::path(head_dir) / "test_nodes.tsv"));
  }
  r.seed = seed;
  r.method = "plgc";
  r.config = c.snapshot_json();
  write_file_atomic(fs::path(g.out) / "results.jsonl", r.to_json_line() + "\n");
  std::printf("%s %s\n", r.metric.c_str(), format_double(r.value).c_str());
  return 0;
}

int cmd_pipeline(const Globals& g) {
  const auto reports = run_pipeline(experiment_config(g), g.out);
  for (const auto& r : reports) {
    std::printf("seed %llu %s %s\n", static_cast<unsigned long long>(r.seed), r.metric.c_str(),
                format_double(r.value).c_str());
  }
  return 0;
}

int cmd_sweep(const Globals& g) {
  const auto c = experiment_config(g);
  const auto report = run_noise_sweep(c, g.out);
  write_file_atomic(fs::path(g.out) / "sweep.csv", sweep_csv(report));
  write_file_atomic(fs::path(g.out) / "sweep.svg", sweep_svg(report));
  std::size_t failed = 0;
  for (const auto& cell : report.cells) failed += !cell.ok;
  for (const auto& s : report.summary) {
    std::printf("%-9s noise %-4s mean %.4f std %.4f (n=%zu)\n", s.method.c_str(), format_metric(s.noise_rate).c_str(),
                s.mean, s.std, s.n);
  }
  if (failed) std::fprintf(stderr, "%zu sweep cell(s) failed; see sweep.csv\n", failed);
  return 0;
}

int cmd_validate_theory(const Globals& g) {
  TheoryConfig c = g.config.empty() ? TheoryConfig{} : load_theory_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  const TheoremParams p = c.params();
  const auto report = validate_theorem(p, c.trials, c.seed, c.workers);
  const auto stationarity = validate_stationarity(c.stationarity_trials, c.seed);

  auto j = nlohmann::ordered_json::parse(theorem_report_json(p, report));
  j["stationarity"] = {{"trials", stationarity.trials},
                       {"converged", stationarity.converged},
                       {"degenerate", stationarity.degenerate},
                       {"min_cosine", stationarity.min_cosine},
                       {"pass", stationarity.pass}};
  write_file_atomic(fs::path(g.out) / "theory_report.json", j.dump(2) + "\n");
  write_file_atomic(fs::path(g.out) / "theory_deviations.csv", theorem_deviations_csv(report));
  std::printf("concentration violation rate %.4f (threshold %.4f), interior violations %zu, separation violations %zu: %s\n",
              report.concentration_rate, report.rate_threshold, report.interior_violations,
              report.separation_violations, report.pass ? "pass" : "fail");
  std::printf("stationarity %zu/%zu converged: %s\n", stationarity.converged, stationarity.trials,
              stationarity.pass ? "pass" : "fail");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging_from_env();
  CLI::App app{"Label-free graph condensation with learned pseudo-labels"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  app.add_option("--config", g.config, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "override the seed list with one seed");
  auto* workers_opt = app.add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber);

  std::string graph_dir, pretrain_dir, backbone_dir, head_dir;
  std::vector<std::string> condensed_dirs;
  std::size_t k = 0;

  auto* gen = app.add_subcommand("gen-sbm", "generate a stochastic block model graph bundle");
  auto* pre = app.add_subcommand("pretrain", "learn prototypes and assignments on a graph");
  pre->add_option("--graph", graph_dir)->required();
  pre->add_option("-k,--prototypes", k, "prototype count (default: from ratio)");
  auto* con = app.add_subcommand("condense", "synthesize condensed features");
  con->add_option("--graph", graph_dir)->required();
  con->add_option("--pretrain", pretrain_dir)->required();
  auto* bb = app.add_subcommand("backbone", "train a fresh encoder from condensed sets");
  bb->add_option("--condensed", condensed_dirs)->required()->expected(1, -1);
  auto* ft = app.add_subcommand("finetune", "fit a head on a frozen backbone");
  ft->add_option("--graph", graph_dir)->required();
  ft->add_option("--backbone", backbone_dir)->required();
  auto* ev = app.add_subcommand("eval", "evaluate a backbone and head");
  ev->add_option("--graph", graph_dir)->required();
  ev->add_option("--backbone", backbone_dir)->required();
  ev->add_option("--head", head_dir)->required();
  auto* pipe = app.add_subcommand("pipeline", "end-to-end run over all seeds");
  auto* sweep = app.add_subcommand("sweep-noise", "label-noise sweep against the supervised baseline");
  auto* theory = app.add_subcommand("validate-theory", "Monte Carlo check of the concentration bounds");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  if (*workers_opt) g.workers = workers;

  try {
    if (*gen) return cmd_gen_sbm(g);
    if (*pre) return cmd_pretrain(g, graph_dir, k);
    if (*con) return cmd_condense(g, graph_dir, pretrain_dir);
    if (*bb) return cmd_backbone(g, condensed_dirs);
    if (*ft) return cmd_finetune(g, graph_dir, backbone_dir);
    if (*ev) return cmd_eval(g, graph_dir, backbone_dir, head_dir);
    if (*pipe) return cmd_pipeline(g);
    if (*sweep) return cmd_sweep(g);
    if (*theory) return cmd_validate_theory(g);
  } catch (const StageError& e) {
    std::fprintf(stderr, "error in stage %s: %s\n", e.stage().c_str(), e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
