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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "plgc/downstream.hpp"
#include "plgc/errors.hpp"
#include "test_support.hpp"

namespace plgc {
namespace {

using testing::random_matrix;

// Brute-force pair count, kept separate from the library.
double pair_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

TEST(FewShot, ThreePerClass) {
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) y.push_back(i % 3);
  const auto idx = sample_few_shot(y, 3, 3, 5);
  ASSERT_EQ(idx.size(), 9u);
  std::vector<int> per(3, 0);
  for (std::size_t i : idx) ++per[static_cast<std::size_t>(y[i])];
  EXPECT_EQ(per, (std::vector<int>{3, 3, 3}));
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 9u);
  EXPECT_EQ(sample_few_shot(y, 3, 3, 5), idx);
}

TEST(FewShot, SmallClassIsExhausted) {
  const std::vector<int> y{0, 0, 1, 0, 0, kUnlabeled};
  const auto idx = sample_few_shot(y, 3, 2, 1);
  EXPECT_EQ(std::count(idx.begin(), idx.end(), 2u), 1);
  EXPECT_EQ(idx.size(), 4u);
  EXPECT_EQ(std::count(idx.begin(), idx.end(), 5u), 0);
}

TEST(FewShot, EmptyClassIsError) {
  EXPECT_THROW(sample_few_shot(std::vector<int>{0, 0, 2}, 1, 3, 0), ContractError);
  EXPECT_THROW(sample_few_shot(std::vector<int>{0, 1}, 1, 2, 0, {true, false}), ContractError);
}

TEST(NodeHead, SeparableEmbeddingsReachPerfectTrainingAccuracy) {
  SbmConfig sbm;
  sbm.feature_noise = 0.0;
  sbm.p_out = 0.0;
  const Graph g = generate_sbm(sbm, 1);
  const EncoderParams backbone = init_encoder(g.feature_dim(), EncoderConfig{32, 16, 2});
  const EncoderParams before = backbone;
  const auto train = sample_few_shot(g.labels, 5, 3, 3);
  const HeadParams head = finetune_node_head(backbone, g, train, HeadConfig{500, 0.5, 4});
  EXPECT_EQ(backbone, before);
  const Matrix z = encode(backbone, normalize_adjacency(g), g.features);
  EXPECT_EQ(node_accuracy(z, head, g.labels, train), 1.0);
}

TEST(NodeHead, ZeroEpochsIsSeededInit) {
  const Matrix z = row_l2_normalize(random_matrix(6, 4, 1));
  const std::vector<int> y{0, 1, 0, 1, 0, 1};
  const std::vector<std::size_t> idx{0, 1, 2};
  EXPECT_EQ(train_node_head(z, y, idx, 2, HeadConfig{0, 0.5, 9}), init_head(4, 2, 9));
}

TEST(NodeHead, TrainingLowersCrossEntropyOnNoisyData) {
  const Matrix z = random_matrix(40, 5, 3);
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) y.push_back(z(i, 0) + 0.3 * z(i, 1) > 0 ? 1 : 0);
  std::vector<std::size_t> idx(40);
  std::iota(idx.begin(), idx.end(), 0);
  const HeadParams h0 = init_head(5, 2, 1);
  const HeadParams h = train_node_head(z, y, idx, 2, HeadConfig{300, 0.5, 1});
  EXPECT_GT(node_accuracy(z, h, y, idx), node_accuracy(z, h0, y, idx) - 1e-12);
  EXPECT_GE(node_accuracy(z, h, y, idx), 0.9);
}

TEST(NodeAccuracy, HandCountedFiveNodes) {
  // Identity head on 2-d embeddings: prediction = larger coordinate.
  const Matrix z = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}});
  const HeadParams head{Matrix::identity(2), Matrix(1, 2, 0.0)};
  const std::vector<int> y{0, 1, 1, 0, 0};
  const std::vector<std::size_t> idx{0, 1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(node_accuracy(z, head, y, idx), 0.6);
  const std::vector<int> perfect{0, 1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(node_accuracy(z, head, perfect, idx), 1.0);
}

TEST(NodeAccuracy, ConstantHeadOnBalancedLabelsIsHalf) {
  const Matrix z = random_matrix(10, 3, 2);
  const HeadParams head{Matrix(3, 2, 0.0), Matrix(1, 2, 0.0)};
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) y.push_back(i % 2);
  std::vector<std::size_t> idx(10);
  std::iota(idx.begin(), idx.end(), 0);
  EXPECT_DOUBLE_EQ(node_accuracy(z, head, y, idx), 0.5);
  EXPECT_EQ(argmax_rows(head_logits(z, head)), std::vector<std::size_t>(10, 0));
}

TEST(NodeAccuracy, InvariantUnderTestPermutation) {
  const Matrix z = random_matrix(20, 4, 5);
  const HeadParams head = init_head(4, 3, 6);
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) y.push_back(i % 3);
  std::vector<std::size_t> idx{1, 4, 7, 9, 12, 15, 18};
  const double a = node_accuracy(z, head, y, idx);
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(1));
  EXPECT_EQ(node_accuracy(z, head, y, idx), a);
}

TEST(EvaluateNode, EmptyTestSetIsError) {
  const Graph g = testing::random_graph(5, 2, 0.5, 0);
  const EncoderParams backbone = init_encoder(2, EncoderConfig{4, 3, 0});
  EXPECT_THROW(evaluate_node(backbone, init_head(3, 2, 0), g, {}), ContractError);
}

TEST(EvalReport, JsonLineCarriesFields) {
  const EvalReport r{"node", "accuracy", 0.75, 8, 3, "plgc", R"({"ratio":0.01})"};
  const auto j = nlohmann::json::parse(r.to_json_line());
  EXPECT_EQ(j.at("task"), "node");
  EXPECT_EQ(j.at("metric"), "accuracy");
  EXPECT_EQ(j.at("value").get<double>(), 0.75);
  EXPECT_EQ(j.at("n_eval").get<std::size_t>(), 8u);
  EXPECT_EQ(j.at("config").at("ratio").get<double>(), 0.01);
}

TEST(Auroc, SpecExamples) {
  EXPECT_EQ(auroc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1}), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{0.8, 0.4, 0.6}, std::vector<int>{1, 1, 0}), 0.5);
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ContractError);
}

TEST(Auroc, RankSumEqualsPairEnumerationExactly) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::mt19937_64 rng(s);
    std::uniform_int_distribution<int> coarse(0, 9);  // forces ties
    std::vector<double> scores;
    std::vector<int> y;
    for (int i = 0; i < 50; ++i) {
      scores.push_back(coarse(rng) / 10.0);
      y.push_back(i % 3 == 0 ? 1 : 0);
    }
    const double oracle = pair_oracle(scores, y);
    EXPECT_EQ(auroc_rank_sum(scores, y), auroc_pairwise(scores, y));
    EXPECT_NEAR(auroc(scores, y), oracle, 1e-15);
  }
}

TEST(Auroc, MonotoneTransformAndComplement) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::vector<double> scores;
    std::vector<int> y;
    std::mt19937_64 rng(s);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
      scores.push_back(n(rng));
      y.push_back(i % 2);
    }
    std::vector<double> warped, negated;
    for (double v : scores) {
      warped.push_back(std::exp(3 * v) + 7);
      negated.push_back(-v);
    }
    EXPECT_EQ(auroc(warped, y), auroc(scores, y));
    EXPECT_NEAR(auroc(scores, y) + auroc(negated, y), 1.0, 1e-15);
  }
}

TEST(LinkHead, BackboneFrozenAndScoresInUnitInterval) {
  SbmConfig sbm;
  sbm.nodes_per_block = 30;
  const Graph g = generate_sbm(sbm, 3);
  const EdgeSplit split = split_edges(g, 4);
  const EncoderParams backbone = init_encoder(g.feature_dim(), EncoderConfig{16, 8, 5});
  const EncoderParams before = backbone;
  const HeadParams head = finetune_link_head(backbone, g, split, HeadConfig{50, 0.5, 6});
  EXPECT_EQ(backbone, before);
  EXPECT_EQ(head.weight.rows(), 8u);
  EXPECT_EQ(head.weight.cols(), 1u);
  const Matrix z = encode(backbone, normalize_adjacency(with_edges(g, split.train_edges)), g.features);
  for (double v : link_scores(z, head, split.test_edges)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const EvalReport r = evaluate_link(backbone, head, g, split);
  EXPECT_EQ(r.metric, "auroc");
  EXPECT_EQ(r.n_eval, split.test_edges.size() + split.test_negatives.size());
  EXPECT_GE(r.value, 0.0);
  EXPECT_LE(r.value, 1.0);
}

TEST(LinkHead, PairFeaturesAreHadamard) {
  const Matrix z = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<Edge> pairs{{0, 2}, {1, 2}};
  EXPECT_EQ(pair_features(z, pairs), Matrix::from_rows({{5, 12}, {15, 24}}));
}

TEST(HeadIo, RoundTrip) {
  const auto dir = testing::fresh_dir("head_io");
  const HeadParams h = init_head(4, 3, 2);
  save_head(h, dir);
  EXPECT_EQ(load_head(dir), h);
}

}  // namespace
}  // namespace plgc
