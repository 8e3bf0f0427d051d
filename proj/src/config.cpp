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

#include "plgc/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"

namespace plgc {

namespace {

struct Value {
  bool is_list = false;
  bool is_string = false;
  std::string scalar;
  std::vector<std::string> items;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

class Reader {
 public:
  Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + what);
  }

  double number(const std::string& s) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) fail("expected a number, got '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_int(const std::string& s) const {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("expected a non-negative integer, got '" + s + "'");
    return v;
  }

  const std::string& scalar(const Value& v) const {
    if (v.is_list) fail("expected a single value, got a list");
    return v.scalar;
  }
  double num(const Value& v) const {
    if (v.is_string) fail("expected a number, got a string");
    return number(scalar(v));
  }
  std::size_t count(const Value& v) const {
    if (v.is_string) fail("expected an integer, got a string");
    return static_cast<std::size_t>(unsigned_int(scalar(v)));
  }
  std::string str(const Value& v) const {
    if (!v.is_string) fail("expected a quoted string");
    return scalar(v);
  }
  bool boolean(const Value& v) const {
    const auto& s = scalar(v);
    if (v.is_string || (s != "true" && s != "false")) fail("expected true or false");
    return s == "true";
  }
  std::vector<double> num_list(const Value& v) const {
    if (!v.is_list) fail("expected a [list]");
    std::vector<double> out;
    for (const auto& s : v.items) out.push_back(number(s));
    return out;
  }
  std::vector<std::uint64_t> uint_list(const Value& v) const {
    if (!v.is_list) fail("expected a [list]");
    std::vector<std::uint64_t> out;
    for (const auto& s : v.items) out.push_back(unsigned_int(s));
    return out;
  }

  using Setter = std::function<void(const Value&)>;

  void run(const std::string& text, const std::map<std::string, Setter>& setters) {
    std::istringstream in(text);
    std::string raw;
    std::set<std::string> seen;
    line_ = 0;
    while (std::getline(in, raw)) {
      ++line_;
      const std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string rhs = trim(std::string_view(line).substr(eq + 1));
      const auto it = setters.find(key);
      if (it == setters.end()) fail("unknown key '" + key + "'");
      if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
      if (rhs.empty()) fail("missing value for '" + key + "'");
      it->second(parse_value(rhs));
    }
  }

 private:
  Value parse_value(const std::string& rhs) const {
    Value v;
    if (rhs.front() == '"') {
      if (rhs.size() < 2 || rhs.back() != '"') fail("unterminated string");
      v.is_string = true;
      v.scalar = rhs.substr(1, rhs.size() - 2);
      return v;
    }
    if (rhs.front() == '[') {
      if (rhs.back() != ']') fail("unterminated list");
      v.is_list = true;
      const std::string body = trim(std::string_view(rhs).substr(1, rhs.size() - 2));
      if (body.empty()) return v;
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) fail("empty list element");
        v.items.push_back(item);
      }
      return v;
    }
    v.scalar = rhs;
    return v;
  }

  std::string origin_;
  std::size_t line_ = 0;
};

}  // namespace

std::size_t condensed_size(double ratio, std::size_t num_nodes) {
  const double k = std::floor(ratio * static_cast<double>(num_nodes) + 0.5);
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

void ExperimentConfig::validate() const {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio must lie in (0, 1]");
  if (num_sources == 0) throw ConfigError("num_sources must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  for (double r : noise_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("noise rates must lie in [0, 1]");
  }
  if (baseline_per_class == 0) throw ConfigError("baseline_per_class must be >= 1");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (pretrain.tau <= 0.0 || pretrain.sinkhorn.epsilon <= 0.0) throw ConfigError("tau and sinkhorn_epsilon must be > 0");
  if (dataset.empty()) {
    sbm.validate();
    // Every source must hold at least K nodes; sources differ by at most one node.
    const std::size_t n = sbm.blocks * sbm.nodes_per_block;
    if (num_sources > n) throw ConfigError("more sources than nodes");
    const std::size_t smallest = n / num_sources;
    if (condensed_size(ratio, smallest) > smallest) throw ConfigError("ratio gives K > N for a source");
  }
}

std::string ExperimentConfig::snapshot_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["sbm"] = {{"blocks", sbm.blocks},
              {"nodes_per_block", sbm.nodes_per_block},
              {"p_in", sbm.p_in},
              {"p_out", sbm.p_out},
              {"feature_dim", sbm.feature_dim},
              {"center_separation", sbm.center_separation},
              {"feature_noise", sbm.feature_noise}};
  j["ratio"] = ratio;
  j["noise_rates"] = noise_rates;
  j["num_sources"] = num_sources;
  j["few_shot"] = few_shot;
  j["test_fraction"] = test_fraction;
  j["task"] = task == Task::kNode ? "node" : "link";
  j["pretrain"] = {{"epochs", pretrain.epochs},
                   {"lr_encoder", pretrain.lr_encoder},
                   {"lr_bank", pretrain.lr_bank},
                   {"tau", pretrain.tau},
                   {"edge_drop", pretrain.edge_drop},
                   {"feature_mask", pretrain.feature_mask},
                   {"sinkhorn_epsilon", pretrain.sinkhorn.epsilon},
                   {"sinkhorn_iters", pretrain.sinkhorn.iters},
                   {"batch_size", pretrain.sinkhorn.batch_size},
                   {"hidden_dim", pretrain.encoder.hidden_dim},
                   {"embed_dim", pretrain.encoder.embed_dim}};
  j["condense"] = {{"steps", condense.steps}, {"lr", condense.lr}};
  j["backbone"] = {{"epochs", backbone_epochs}, {"lr", backbone_lr}};
  j["head"] = {{"epochs", head.epochs}, {"lr", head.lr}};
  j["baseline_per_class"] = baseline_per_class;
  j["baseline_reuse_head"] = baseline_reuse_head;
  return j.dump();
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  Reader r(origin);
  std::map<std::string, Reader::Setter> s{
      {"dataset", [&](const Value& v) { c.dataset = r.str(v); }},
      {"sbm_blocks", [&](const Value& v) { c.sbm.blocks = r.count(v); }},
      {"sbm_nodes_per_block", [&](const Value& v) { c.sbm.nodes_per_block = r.count(v); }},
      {"sbm_p_in", [&](const Value& v) { c.sbm.p_in = r.num(v); }},
      {"sbm_p_out", [&](const Value& v) { c.sbm.p_out = r.num(v); }},
      {"sbm_feature_dim", [&](const Value& v) { c.sbm.feature_dim = r.count(v); }},
      {"sbm_center_separation", [&](const Value& v) { c.sbm.center_separation = r.num(v); }},
      {"sbm_feature_noise", [&](const Value& v) { c.sbm.feature_noise = r.num(v); }},
      {"ratio", [&](const Value& v) { c.ratio = r.num(v); }},
      {"noise_rates", [&](const Value& v) { c.noise_rates = r.num_list(v); }},
      {"num_sources", [&](const Value& v) { c.num_sources = r.count(v); }},
      {"seeds", [&](const Value& v) { c.seeds = r.uint_list(v); }},
      {"few_shot", [&](const Value& v) { c.few_shot = r.count(v); }},
      {"test_fraction", [&](const Value& v) { c.test_fraction = r.num(v); }},
      {"task",
       [&](const Value& v) {
         const auto t = r.str(v);
         if (t != "node" && t != "link") r.fail("task must be \"node\" or \"link\"");
         c.task = t == "node" ? Task::kNode : Task::kLink;
       }},
      {"pretrain_epochs", [&](const Value& v) { c.pretrain.epochs = r.count(v); }},
      {"lr_encoder", [&](const Value& v) { c.pretrain.lr_encoder = r.num(v); }},
      {"lr_bank", [&](const Value& v) { c.pretrain.lr_bank = r.num(v); }},
      {"tau", [&](const Value& v) { c.pretrain.tau = r.num(v); }},
      {"edge_drop", [&](const Value& v) { c.pretrain.edge_drop = r.num(v); }},
      {"feature_mask", [&](const Value& v) { c.pretrain.feature_mask = r.num(v); }},
      {"sinkhorn_epsilon", [&](const Value& v) { c.pretrain.sinkhorn.epsilon = r.num(v); }},
      {"sinkhorn_iters", [&](const Value& v) { c.pretrain.sinkhorn.iters = r.count(v); }},
      {"batch_size", [&](const Value& v) { c.pretrain.sinkhorn.batch_size = r.count(v); }},
      {"hidden_dim", [&](const Value& v) { c.pretrain.encoder.hidden_dim = r.count(v); }},
      {"embed_dim", [&](const Value& v) { c.pretrain.encoder.embed_dim = r.count(v); }},
      {"condense_steps", [&](const Value& v) { c.condense.steps = r.count(v); }},
      {"condense_lr", [&](const Value& v) { c.condense.lr = r.num(v); }},
      {"backbone_epochs", [&](const Value& v) { c.backbone_epochs = r.count(v); }},
      {"backbone_lr", [&](const Value& v) { c.backbone_lr = r.num(v); }},
      {"head_epochs", [&](const Value& v) { c.head.epochs = r.count(v); }},
      {"head_lr", [&](const Value& v) { c.head.lr = r.num(v); }},
      {"baseline_per_class", [&](const Value& v) { c.baseline_per_class = r.count(v); }},
      {"baseline_reuse_head", [&](const Value& v) { c.baseline_reuse_head = r.boolean(v); }},
      {"workers", [&](const Value& v) { c.workers = r.count(v); }},
  };
  r.run(text, s);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path), path.string());
}

TheoremParams TheoryConfig::params() const {
  TheoremParams p = make_theorem_params(d, k, sigma, delta, beta, min_sep);
  p.noise_scale = noise_scale;
  p.noise = noise;
  if (samples > 0) p.samples.assign(k, samples);
  return p;
}

TheoryConfig parse_theory_config(const std::string& text, const std::string& origin) {
  TheoryConfig c;
  Reader r(origin);
  std::map<std::string, Reader::Setter> s{
      {"d", [&](const Value& v) { c.d = r.count(v); }},
      {"K", [&](const Value& v) { c.k = r.count(v); }},
      {"sigma", [&](const Value& v) { c.sigma = r.num(v); }},
      {"delta", [&](const Value& v) { c.delta = r.num(v); }},
      {"beta", [&](const Value& v) { c.beta = r.num(v); }},
      {"min_sep", [&](const Value& v) { c.min_sep = r.num(v); }},
      {"noise_scale", [&](const Value& v) { c.noise_scale = r.num(v); }},
      {"noise",
       [&](const Value& v) {
         const auto n = r.str(v);
         if (n != "gaussian" && n != "uniform") r.fail("noise must be \"gaussian\" or \"uniform\"");
         c.noise = n == "gaussian" ? NoiseModel::kGaussian : NoiseModel::kUniform;
       }},
      {"samples", [&](const Value& v) { c.samples = r.count(v); }},
      {"trials", [&](const Value& v) { c.trials = r.count(v); }},
      {"stationarity_trials", [&](const Value& v) { c.stationarity_trials = r.count(v); }},
      {"seed", [&](const Value& v) { c.seed = r.count(v); }},
      {"workers", [&](const Value& v) { c.workers = r.count(v); }},
  };
  r.run(text, s);
  return c;
}

TheoryConfig load_theory_config(const std::filesystem::path& path) {
  return parse_theory_config(read_file(path), path.string());
}

}  // namespace plgc
