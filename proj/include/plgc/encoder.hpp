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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "plgc/graph.hpp"
#include "plgc/matrix.hpp"
#include "plgc/tape.hpp"

namespace plgc {

struct EncoderConfig {
  std::size_t hidden_dim = 128;
  std::size_t embed_dim = 64;
  std::uint64_t seed = 0;
};

// Two graph-convolution layers: w1 is d×hidden, w2 is hidden×embed.
struct EncoderParams {
  Matrix w1;
  Matrix w2;

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t embed_dim() const { return w2.cols(); }

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

// Glorot-uniform weights, deterministic in cfg.seed.
EncoderParams init_encoder(std::size_t input_dim, const EncoderConfig& cfg);

// Tape handles for a forward pass whose parameters are differentiable leaves.
struct EncoderVars {
  Tape::Var w1;
  Tape::Var w2;
};

EncoderVars track(Tape& tape, const EncoderParams& p);

// Z = row_l2_normalize(Â · relu(Â · X · W1) · W2), recorded on `tape`.
Tape::Var encode(Tape& tape, const EncoderVars& p, const NormalizedAdjacency& adj, Tape::Var x);

// Forward-only convenience.
Matrix encode(const EncoderParams& p, const NormalizedAdjacency& adj, const Matrix& x);

// params.json (dims) + params.bin (w1 then w2, each in the .bin matrix layout).
void save_encoder(const EncoderParams& p, const std::filesystem::path& dir);
EncoderParams load_encoder(const std::filesystem::path& dir);

}  // namespace plgc
