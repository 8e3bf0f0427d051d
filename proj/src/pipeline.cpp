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

#include "plgc/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/log.hpp"
#include "plgc/rng.hpp"

namespace plgc {

namespace fs = std::filesystem;

namespace {

// Stream ids for derive_seed(seed, ·).
constexpr std::uint64_t kStreamGraph = 1;
constexpr std::uint64_t kStreamTest = 20;
constexpr std::uint64_t kStreamPartition = 21;
constexpr std::uint64_t kStreamBackbone = 30;
constexpr std::uint64_t kStreamFewShot = 40;
constexpr std::uint64_t kStreamHead = 41;
constexpr std::uint64_t kStreamEdges = 50;
constexpr std::uint64_t kStreamSource = 100;

const char* kDone = ".done";

template <class Compute, class Save, class Load>
auto run_stage(const std::string& name, const fs::path& dir, Compute compute, Save save, Load load) {
  try {
    if (!dir.empty() && fs::exists(dir / kDone)) {
      spdlog::info("{}: reusing {}", name, dir.string());
      return load(dir);
    }
    auto value = compute();
    if (!dir.empty()) {
      save(value, dir);
      write_file_atomic(dir / kDone, "");
    }
    return value;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

std::vector<std::size_t> split_test_nodes(const Graph& g, double test_fraction, std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < g.labels.size(); ++i) {
    if (g.labels[i] != kUnlabeled) labeled.push_back(i);
  }
  Rng rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  const auto n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(labeled.size())));
  labeled.resize(std::min(n, labeled.size()));
  std::sort(labeled.begin(), labeled.end());
  return labeled;
}

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  try {
    SeedData d;
    d.graph = cfg.dataset.empty() ? generate_sbm(cfg.sbm, derive_seed(seed, kStreamGraph)) : load_graph(cfg.dataset);
    if (cfg.num_sources > d.graph.num_nodes) throw ConfigError("more sources than nodes");
    if (condensed_size(cfg.ratio, d.graph.num_nodes / cfg.num_sources) > d.graph.num_nodes / cfg.num_sources) {
      throw ConfigError("ratio gives K > N for a source");
    }
    d.pretrain_graph = d.graph;
    if (cfg.task == Task::kNode) {
      if (!d.graph.has_labels()) throw ConfigError("node task needs labels");
      d.num_classes = infer_num_classes(d.graph);
      d.test_idx = split_test_nodes(d.graph, cfg.test_fraction, derive_seed(seed, kStreamTest));
      d.in_test.assign(d.graph.num_nodes, false);
      for (auto i : d.test_idx) d.in_test[i] = true;
    } else {
      d.split = split_edges(d.graph, derive_seed(seed, kStreamEdges));
      d.pretrain_graph = with_edges(d.graph, d.split->train_edges);
    }
    return d;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("prepare", e.what());
  }
}

PlgcModel build_plgc(const ExperimentConfig& cfg, const SeedData& data, std::uint64_t seed,
                     const fs::path& seed_dir) {
  PlgcModel m;
  try {
    m.sources = partition_sources(data.pretrain_graph, cfg.num_sources, derive_seed(seed, kStreamPartition));
  } catch (const std::exception& e) {
    throw StageError("partition", e.what());
  }
  auto sub = [&](const std::string& a, std::size_t i) {
    return seed_dir.empty() ? fs::path{} : seed_dir / a / ("src_" + std::to_string(i));
  };

  for (std::size_t i = 0; i < m.sources.size(); ++i) {
    const Graph& src = m.sources[i];
    const std::size_t k = condensed_size(cfg.ratio, src.num_nodes);
    PseudoLabelConfig pc = cfg.pretrain;
    pc.num_prototypes = k;
    pc.seed = derive_seed(seed, kStreamSource + i);

    auto pl = run_stage(
        "pretrain", sub("pretrain", i), [&] { return train_pseudo_labels(src, pc); },
        [](const PseudoLabelResult& r, const fs::path& dir) { save_pseudo_labels(r, dir); },
        [](const fs::path& dir) { return load_pseudo_labels(dir); });

    auto condensed = run_stage(
        "condense", sub("condensed", i),
        [&] {
          const Matrix init = init_condensed(src, pl.q_full, k);
          return condense(init, pl.encoder, pl.bank, cfg.condense, "src_" + std::to_string(i));
        },
        [](const CondensedGraph& c, const fs::path& dir) { save_condensed(c, dir); },
        [](const fs::path& dir) { return load_condensed(dir); });

    m.source_encoders.push_back(std::move(pl.encoder));
    m.condensed.push_back(std::move(condensed));
  }

  m.backbone = run_stage(
      "backbone", seed_dir.empty() ? fs::path{} : seed_dir / "backbone",
      [&] {
        EncoderConfig ec = cfg.pretrain.encoder;
        return reconstruct_backbone(m.condensed, ec, cfg.backbone_epochs, cfg.backbone_lr,
                                    derive_seed(seed, kStreamBackbone))
            .params;
      },
      [](const EncoderParams& p, const fs::path& dir) { save_encoder(p, dir); },
      [](const fs::path& dir) { return load_encoder(dir); });
  return m;
}

std::vector<std::size_t> finetune_nodes(const ExperimentConfig& cfg, const SeedData& data,
                                        std::span<const int> labels, std::uint64_t seed,
                                        const std::vector<bool>& eligible) {
  std::vector<bool> pool(data.graph.num_nodes, true);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i] = !data.in_test[i] && (eligible.empty() || eligible[i]);
  }
  if (cfg.few_shot == 0) {
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i] && labels[i] != kUnlabeled) all.push_back(i);
    }
    return all;
  }
  return sample_few_shot(labels, cfg.few_shot, data.num_classes, derive_seed(seed, kStreamFewShot), pool);
}

EvalReport finetune_and_evaluate(const ExperimentConfig& cfg, const SeedData& data, const EncoderParams& backbone,
                                 std::span<const std::size_t> train_idx, std::uint64_t seed) {
  HeadConfig hc = cfg.head;
  hc.seed = derive_seed(seed, kStreamHead);
  EvalReport r;
  try {
    if (cfg.task == Task::kNode) {
      const HeadParams head = finetune_node_head(backbone, data.graph, train_idx, hc);
      r = evaluate_node(backbone, head, data.graph, data.test_idx);
    } else {
      const HeadParams head = finetune_link_head(backbone, data.graph, *data.split, hc);
      r = evaluate_link(backbone, head, data.graph, *data.split);
    }
  } catch (const std::exception& e) {
    throw StageError("finetune", e.what());
  }
  r.seed = seed;
  return r;
}

std::vector<EvalReport> run_pipeline(const ExperimentConfig& cfg, const fs::path& out) {
  std::uint64_t current_seed = 0;
  try {
    try {
      cfg.validate();
    } catch (const std::exception& e) {
      throw StageError("config", e.what());
    }
    std::vector<EvalReport> reports;
    std::string lines;
    for (std::uint64_t seed : cfg.seeds) {
      current_seed = seed;
      const fs::path seed_dir = out / ("seed_" + std::to_string(seed));
      const SeedData data = prepare_seed(cfg, seed);
      const PlgcModel model = build_plgc(cfg, data, seed, seed_dir);
      std::vector<std::size_t> train;
      if (cfg.task == Task::kNode) {
        try {
          train = finetune_nodes(cfg, data, data.graph.labels, seed);
        } catch (const std::exception& e) {
          throw StageError("finetune", e.what());
        }
      }
      EvalReport r = finetune_and_evaluate(cfg, data, model.backbone, train, seed);
      r.method = "plgc";
      r.config = cfg.snapshot_json();
      spdlog::info("seed {}: {} {} = {}", seed, r.task, r.metric, r.value);
      write_file_atomic(seed_dir / "report.json", r.to_json_line() + "\n");
      lines += r.to_json_line() + "\n";
      reports.push_back(std::move(r));
    }
    write_file_atomic(out / "results.jsonl", lines);
    return reports;
  } catch (const StageError& e) {
    nlohmann::ordered_json j{{"stage", e.stage()}, {"seed", current_seed}, {"error", e.what()}};
    write_file_atomic(out / "error.json", j.dump(2) + "\n");
    throw;
  }
}

}  // namespace plgc
