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

#include "plgc/encoder.hpp"

#include <cmath>
#include <cstring>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/rng.hpp"

namespace plgc {

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(fan_in, fan_out);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

void append_bin(std::string& out, const Matrix& m) {
  const std::uint64_t dims[2] = {m.rows(), m.cols()};
  out.append(reinterpret_cast<const char*>(dims), 16);
  out.append(reinterpret_cast<const char*>(m.values().data()), 8 * m.size());
}

Matrix read_bin(const std::string& raw, std::size_t& offset, const std::string& file) {
  if (raw.size() < offset + 16) throw ParseError(file, 0, "truncated matrix header");
  std::uint64_t dims[2];
  std::memcpy(dims, raw.data() + offset, 16);
  offset += 16;
  const std::size_t count = dims[0] * dims[1];
  if (raw.size() < offset + 8 * count) throw ParseError(file, 0, "truncated matrix payload");
  std::vector<double> data(count);
  if (count > 0) std::memcpy(data.data(), raw.data() + offset, 8 * count);
  offset += 8 * count;
  return Matrix(dims[0], dims[1], std::move(data));
}

}  // namespace

EncoderParams init_encoder(std::size_t input_dim, const EncoderConfig& cfg) {
  if (input_dim == 0 || cfg.hidden_dim == 0 || cfg.embed_dim == 0) {
    throw ContractError("init_encoder: dimensions must be >= 1");
  }
  Rng rng(cfg.seed);
  EncoderParams p;
  p.w1 = glorot(input_dim, cfg.hidden_dim, rng);
  p.w2 = glorot(cfg.hidden_dim, cfg.embed_dim, rng);
  return p;
}

EncoderVars track(Tape& tape, const EncoderParams& p) {
  return EncoderVars{tape.input(p.w1), tape.input(p.w2)};
}

Tape::Var encode(Tape& tape, const EncoderVars& p, const NormalizedAdjacency& adj, Tape::Var x) {
  if (tape.value(x).cols() != tape.value(p.w1).rows()) {
    throw ContractError("encode: feature dim " + std::to_string(tape.value(x).cols()) +
                        " != encoder input dim " + std::to_string(tape.value(p.w1).rows()));
  }
  if (tape.value(x).rows() != adj.size()) {
    throw ContractError("encode: adjacency size does not match feature rows");
  }
  auto h = tape.relu(tape.spmm(adj.matrix, tape.matmul(x, p.w1)));
  auto out = tape.spmm(adj.matrix, tape.matmul(h, p.w2));
  return tape.row_l2_normalize(out);
}

Matrix encode(const EncoderParams& p, const NormalizedAdjacency& adj, const Matrix& x) {
  Tape tape;
  const auto vars = EncoderVars{tape.constant(p.w1), tape.constant(p.w2)};
  return tape.value(encode(tape, vars, adj, tape.constant(x)));
}

void save_encoder(const EncoderParams& p, const std::filesystem::path& dir) {
  nlohmann::json meta = {{"input_dim", p.input_dim()},
                         {"hidden_dim", p.hidden_dim()},
                         {"embed_dim", p.embed_dim()}};
  std::string bin;
  append_bin(bin, p.w1);
  append_bin(bin, p.w2);
  write_file_atomic(dir / "params.bin", bin);
  write_file_atomic(dir / "params.json", meta.dump(2) + "\n");
}

EncoderParams load_encoder(const std::filesystem::path& dir) {
  const std::string file = (dir / "params.bin").string();
  const auto meta = nlohmann::json::parse(read_file(dir / "params.json"));
  const std::string raw = read_file(dir / "params.bin");
  std::size_t offset = 0;
  EncoderParams p;
  p.w1 = read_bin(raw, offset, file);
  p.w2 = read_bin(raw, offset, file);
  if (offset != raw.size()) throw ParseError(file, 0, "trailing bytes");
  if (p.w1.rows() != meta.at("input_dim").get<std::size_t>() ||
      p.w1.cols() != meta.at("hidden_dim").get<std::size_t>() ||
      p.w2.rows() != p.w1.cols() || p.w2.cols() != meta.at("embed_dim").get<std::size_t>()) {
    throw ParseError(file, 0, "weight shapes disagree with params.json");
  }
  return p;
}

}  // namespace plgc
