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

#include <charconv>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/graph.hpp"

namespace plgc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Parses whitespace-separated integers on one line.
std::vector<long long> parse_ints(const std::string& line, const std::string& file, std::size_t line_no) {
  std::vector<long long> out;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    long long v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r')) {
      throw ParseError(file, line_no, "expected an integer");
    }
    out.push_back(v);
    p = next;
  }
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

std::size_t meta_count(const json& meta, const char* key, const std::string& file) {
  if (!meta.contains(key) || !meta[key].is_number_integer() || meta[key].get<long long>() < 0) {
    throw ParseError(file, 0, std::string("missing or invalid \"") + key + "\"");
  }
  return meta[key].get<std::size_t>();
}

}  // namespace

Graph load_graph(const fs::path& dir) {
  const std::string meta_file = (dir / "meta.json").string();
  json meta;
  try {
    meta = json::parse(read_file(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw ParseError(meta_file, 0, e.what());
  }
  Graph g;
  g.num_nodes = meta_count(meta, "num_nodes", meta_file);
  const std::size_t d = meta_count(meta, "feature_dim", meta_file);
  if (meta.contains("num_classes") && !meta["num_classes"].is_null()) {
    g.num_classes = meta_count(meta, "num_classes", meta_file);
  }

  const fs::path feat_path = dir / "features.tsv";
  g.features = load_matrix_tsv(feat_path);
  if (g.features.rows() != g.num_nodes) {
    throw ParseError(feat_path.string(), 0,
                     "expected " + std::to_string(g.num_nodes) + " rows, got " +
                         std::to_string(g.features.rows()));
  }
  if (g.num_nodes > 0 && g.features.cols() != d) {
    throw ParseError(feat_path.string(), 1,
                     "expected " + std::to_string(d) + " columns, got " + std::to_string(g.features.cols()));
  }
  if (g.num_nodes == 0) g.features = Matrix(0, d);

  const std::string edge_file = (dir / "edges.tsv").string();
  {
    std::istringstream in(read_file(dir / "edges.tsv"));
    std::string line;
    std::size_t line_no = 0;
    std::set<Edge> seen;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      const auto v = parse_ints(line, edge_file, line_no);
      if (v.size() != 2) throw ParseError(edge_file, line_no, "expected two node indices");
      for (long long x : v) {
        if (x < 0 || static_cast<std::size_t>(x) >= g.num_nodes) {
          throw ParseError(edge_file, line_no, "node index " + std::to_string(x) + " out of range");
        }
      }
      if (v[0] == v[1]) throw ParseError(edge_file, line_no, "self-loop");
      const Edge e = make_edge(static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]));
      if (!seen.insert(e).second) throw ParseError(edge_file, line_no, "duplicate edge");
      g.edges.push_back(e);
    }
  }

  if (fs::exists(dir / "labels.tsv")) {
    const std::string label_file = (dir / "labels.tsv").string();
    std::istringstream in(read_file(dir / "labels.tsv"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      const auto v = parse_ints(line, label_file, line_no);
      if (v.size() != 1) throw ParseError(label_file, line_no, "expected one label");
      if (v[0] < kUnlabeled || (g.num_classes && v[0] >= static_cast<long long>(*g.num_classes))) {
        throw ParseError(label_file, line_no, "label " + std::to_string(v[0]) + " out of range");
      }
      g.labels.push_back(static_cast<int>(v[0]));
    }
    if (g.labels.size() != g.num_nodes) {
      throw ParseError(label_file, line_no,
                       "expected " + std::to_string(g.num_nodes) + " labels, got " +
                           std::to_string(g.labels.size()));
    }
  }

  if (fs::exists(dir / "node_ids.tsv")) {
    const Matrix ids = load_matrix_tsv(dir / "node_ids.tsv");
    if (ids.rows() != g.num_nodes || ids.cols() != 1) {
      throw ParseError((dir / "node_ids.tsv").string(), 0, "expected one id per node");
    }
    for (double v : ids.values()) g.original_ids.push_back(static_cast<std::size_t>(v));
  }
  return g;
}

void save_graph(const Graph& g, const fs::path& dir) {
  g.validate();
  fs::create_directories(dir);
  save_matrix_tsv(g.features, dir / "features.tsv");

  std::string edges;
  for (const Edge& e : g.edges) edges += std::to_string(e.u) + "\t" + std::to_string(e.v) + "\n";
  write_file_atomic(dir / "edges.tsv", edges);

  if (g.has_labels()) {
    std::string labels;
    for (int y : g.labels) labels += std::to_string(y) + "\n";
    write_file_atomic(dir / "labels.tsv", labels);
  } else {
    fs::remove(dir / "labels.tsv");
  }
  if (!g.original_ids.empty()) {
    std::string ids;
    for (std::size_t v : g.original_ids) ids += std::to_string(v) + "\n";
    write_file_atomic(dir / "node_ids.tsv", ids);
  } else {
    fs::remove(dir / "node_ids.tsv");
  }
  json meta = {{"num_nodes", g.num_nodes}, {"feature_dim", g.feature_dim()}};
  meta["num_classes"] = g.num_classes ? json(*g.num_classes) : json(nullptr);
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace plgc
