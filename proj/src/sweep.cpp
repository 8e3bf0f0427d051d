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

#include "plgc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "plgc/errors.hpp"
#include "plgc/log.hpp"
#include "plgc/pipeline.hpp"
#include "plgc/rng.hpp"

namespace plgc {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamNoise = 2000;
constexpr std::uint64_t kStreamBaselineBackbone = 31;
constexpr std::uint64_t kStreamBaselineHead = 42;

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

struct SeedState {
  std::optional<SeedData> data;
  std::optional<PlgcModel> model;
  std::string error;
};

double baseline_accuracy(const ExperimentConfig& cfg, const SeedData& data, const PlgcModel& model,
                         std::span<const int> noisy, std::span<const std::size_t> train, std::uint64_t seed) {
  std::vector<CondensedGraph> sets;
  std::vector<BaselineCondensed> labeled;
  for (std::size_t i = 0; i < model.sources.size(); ++i) {
    Graph src = model.sources[i];
    for (std::size_t j = 0; j < src.num_nodes; ++j) src.labels[j] = noisy[src.original_ids[j]];
    src.num_classes = data.num_classes;
    BaselineCondensed b;
    try {
      b = supervised_baseline_condense(src, src.labels, model.source_encoders[i], cfg.baseline_per_class,
                                       cfg.condense);
    } catch (const std::exception& e) {
      throw StageError("baseline-condense", e.what());
    }
    sets.push_back(baseline_as_condensed(b, "src_" + std::to_string(i)));
    labeled.push_back(std::move(b));
  }
  EncoderParams backbone;
  try {
    backbone = reconstruct_backbone(sets, cfg.pretrain.encoder, cfg.backbone_epochs, cfg.backbone_lr,
                                    derive_seed(seed, kStreamBaselineBackbone))
                   .params;
  } catch (const std::exception& e) {
    throw StageError("baseline-backbone", e.what());
  }
  if (!cfg.baseline_reuse_head) return finetune_and_evaluate(cfg, data, backbone, train, seed).value;

  try {
    // Head first fit to the condensed rows and their (noisy) class labels,
    // then fine-tuned on the clean subset from that starting point.
    Matrix rows(0, 0);
    std::vector<int> row_labels;
    std::vector<Matrix> parts;
    for (const auto& b : labeled) {
      parts.push_back(encode(backbone, identity_adjacency(b.features.rows()), b.features));
      row_labels.insert(row_labels.end(), b.labels.begin(), b.labels.end());
    }
    rows = Matrix(row_labels.size(), backbone.embed_dim());
    std::size_t r = 0;
    for (const auto& p : parts) {
      for (std::size_t i = 0; i < p.rows(); ++i, ++r) std::copy_n(p.row(i).begin(), p.cols(), rows.row(r).begin());
    }
    std::vector<std::size_t> all(row_labels.size());
    std::iota(all.begin(), all.end(), 0);
    HeadConfig hc = cfg.head;
    hc.seed = derive_seed(seed, kStreamBaselineHead);
    const HeadParams condensed_head = train_node_head(rows, row_labels, all, data.num_classes, hc);
    const Matrix z = encode(backbone, normalize_adjacency(data.graph), data.graph.features);
    const HeadParams head = train_node_head(z, data.graph.labels, train, hc, condensed_head);
    return node_accuracy(z, head, data.graph.labels, data.test_idx);
  } catch (const std::exception& e) {
    throw StageError("finetune", e.what());
  }
}

}  // namespace

std::string format_metric(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const SweepSummary& SweepReport::at(double noise_rate, const std::string& method) const {
  for (const auto& s : summary) {
    if (s.noise_rate == noise_rate && s.method == method) return s;
  }
  throw ContractError("sweep: no summary for " + method + " at noise " + format_metric(noise_rate));
}

SweepReport run_noise_sweep(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  if (cfg.noise_rates.empty()) throw ConfigError("noise_rates must be non-empty for a sweep");
  if (cfg.task != Task::kNode) throw ConfigError("the noise sweep needs task = \"node\"");

  SweepReport report;
  report.dataset = cfg.dataset.empty() ? "sbm" : fs::path(cfg.dataset).filename().string();
  report.sources = cfg.num_sources;
  report.noise_rates = cfg.noise_rates;

  std::vector<SeedState> seeds(cfg.seeds.size());
  parallel_for(seeds.size(), cfg.workers, [&](std::size_t s) {
    const std::uint64_t seed = cfg.seeds[s];
    try {
      seeds[s].data = prepare_seed(cfg, seed);
      seeds[s].model = build_plgc(cfg, *seeds[s].data, seed,
                                  out.empty() ? fs::path{} : out / ("seed_" + std::to_string(seed)));
    } catch (const std::exception& e) {
      seeds[s].error = e.what();
      spdlog::error("seed {}: {}", seed, e.what());
    }
  });

  for (double noise : cfg.noise_rates) {
    for (const char* method : {kMethodPlgc, kMethodBaseline}) {
      for (std::uint64_t seed : cfg.seeds) report.cells.push_back({noise, method, seed, false, 0.0, {}});
    }
  }

  parallel_for(report.cells.size(), cfg.workers, [&](std::size_t c) {
    SweepCell& cell = report.cells[c];
    const std::size_t s = static_cast<std::size_t>(
        std::find(cfg.seeds.begin(), cfg.seeds.end(), cell.seed) - cfg.seeds.begin());
    const SeedState& st = seeds[s];
    if (!st.model) {
      cell.error = st.error;
      return;
    }
    try {
      const SeedData& data = *st.data;
      // Only non-test labels are visible to condensation and can be corrupted.
      std::vector<int> visible = data.graph.labels;
      for (auto i : data.test_idx) visible[i] = kUnlabeled;
      const auto noise_stream = kStreamNoise + static_cast<std::uint64_t>(std::llround(cell.noise_rate * 1e6));
      const std::vector<int> noisy =
          inject_label_noise(visible, cell.noise_rate, data.num_classes, derive_seed(cell.seed, noise_stream));
      std::vector<bool> clean(noisy.size());
      for (std::size_t i = 0; i < noisy.size(); ++i) clean[i] = noisy[i] == visible[i];
      const auto train = finetune_nodes(cfg, data, data.graph.labels, cell.seed, clean);

      if (cell.method == kMethodPlgc) {
        cell.value = finetune_and_evaluate(cfg, data, st.model->backbone, train, cell.seed).value;
      } else {
        cell.value = baseline_accuracy(cfg, data, *st.model, noisy, train, cell.seed);
      }
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
      spdlog::error("cell noise={} method={} seed={}: {}", cell.noise_rate, cell.method, cell.seed, e.what());
    }
  });

  for (double noise : cfg.noise_rates) {
    for (const char* method : {kMethodPlgc, kMethodBaseline}) {
      std::vector<double> v;
      for (const auto& cell : report.cells) {
        if (cell.ok && cell.noise_rate == noise && cell.method == method) v.push_back(cell.value);
      }
      SweepSummary sm{noise, method, 0.0, 0.0, v.size()};
      if (!v.empty()) {
        for (double x : v) sm.mean += x;
        sm.mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
          double ss = 0.0;
          for (double x : v) ss += (x - sm.mean) * (x - sm.mean);
          sm.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
      }
      report.summary.push_back(sm);
    }
  }
  return report;
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "dataset,task,method,noise_rate,sources,seed,metric,value\n";
  const auto prefix = [&](const std::string& method, double noise) {
    os << r.dataset << ',' << r.task << ',' << method << ',' << format_metric(noise) << ',' << r.sources << ',';
  };
  for (const auto& c : r.cells) {
    prefix(c.method, c.noise_rate);
    os << c.seed << ',' << r.metric << ',' << (c.ok ? format_metric(c.value) : std::string("failed")) << '\n';
  }
  for (const auto& s : r.summary) {
    prefix(s.method, s.noise_rate);
    os << "mean," << r.metric << ',' << (s.n ? format_metric(s.mean) : std::string("failed")) << '\n';
    prefix(s.method, s.noise_rate);
    os << "std," << r.metric << ',' << (s.n ? format_metric(s.std) : std::string("failed")) << '\n';
  }
  return os.str();
}

std::string sweep_svg(const SweepReport& r) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 30, kBottom = 60;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  const double x_lo = r.noise_rates.empty() ? 0.0 : *std::min_element(r.noise_rates.begin(), r.noise_rates.end());
  const double x_hi = r.noise_rates.empty() ? 1.0 : *std::max_element(r.noise_rates.begin(), r.noise_rates.end());
  const auto px = [&](double x) {
    return x_hi > x_lo ? kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w : kLeft + plot_w / 2;
  };
  const auto py = [&](double y) { return kTop + (1.0 - std::clamp(y, 0.0, 1.0)) * plot_h; };
  const auto coord = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
     << kTop + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
     << "\" stroke=\"black\"/>\n";
  for (double x : r.noise_rates) {
    os << "<line x1=\"" << coord(px(x)) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << coord(px(x)) << "\" y2=\""
       << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    os << "<text class=\"tick\" x=\"" << coord(px(x)) << "\" y=\"" << kTop + plot_h + 20
       << "\" text-anchor=\"middle\" font-size=\"12\">" << format_metric(x) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 15
     << "\" text-anchor=\"middle\" font-size=\"13\">label noise rate</text>\n";
  os << "<text x=\"20\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 20 " << kTop + plot_h / 2
     << ")\" text-anchor=\"middle\" font-size=\"13\">" << r.metric << "</text>\n";

  const std::pair<const char*, const char*> styles[] = {{kMethodPlgc, "#1f77b4"}, {kMethodBaseline, "#d62728"}};
  std::size_t legend = 0;
  for (const auto& [method, color] : styles) {
    std::vector<const SweepSummary*> pts;
    for (double x : r.noise_rates) {
      const auto& s = r.at(x, method);
      if (s.n) pts.push_back(&s);
    }
    if (pts.empty()) continue;
    // Band: upper edge left to right, lower edge back.
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto* s : pts) os << coord(px(s->noise_rate)) << ',' << coord(py(s->mean + s->std)) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      os << coord(px((*it)->noise_rate)) << ',' << coord(py((*it)->mean - (*it)->std)) << ' ';
    }
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* s : pts) os << coord(px(s->noise_rate)) << ',' << coord(py(s->mean)) << ' ';
    os << "\"/>\n";
    for (const auto* s : pts) {
      os << "<circle cx=\"" << coord(px(s->noise_rate)) << "\" cy=\"" << coord(py(s->mean)) << "\" r=\"3\" fill=\""
         << color << "\" data-method=\"" << method << "\" data-noise=\"" << format_metric(s->noise_rate)
         << "\" data-mean=\"" << format_metric(s->mean) << "\" data-std=\"" << format_metric(s->std) << "\"/>\n";
    }
    const double ly = kTop + 20 + 20 * static_cast<double>(legend++);
    os << "<line x1=\"" << kW - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kW - kRight + 45 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << method << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace plgc
