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

#include <sys/wait.h>

#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plgc/errors.hpp"
#include "plgc/fs.hpp"
#include "plgc/pipeline.hpp"
#include "plgc/sweep.hpp"
#include "test_support.hpp"

namespace plgc {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.seeds = {7};
  c.sbm.nodes_per_block = 40;
  c.ratio = 0.025;  // K = 3
  c.pretrain.epochs = 40;
  c.pretrain.encoder = EncoderConfig{32, 16, 0};
  c.condense.steps = 100;
  c.backbone_epochs = 100;
  return c;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Pipeline, SingleSourceEndToEnd) {
  const auto out = testing::fresh_dir("pipeline_e2e");
  const auto reports = run_pipeline(small_config(), out);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_TRUE(fs::exists(out / "seed_7" / "condensed" / "src_0" / "features.tsv"));
  EXPECT_TRUE(fs::exists(out / "seed_7" / "pretrain" / "src_0" / "prototypes.tsv"));
  EXPECT_TRUE(fs::exists(out / "seed_7" / "backbone" / "params.bin"));
  const auto lines = lines_of(read_file(out / "results.jsonl"));
  ASSERT_EQ(lines.size(), 1u);
  const auto j = nlohmann::json::parse(lines[0]);
  EXPECT_EQ(j.at("task"), "node");
  EXPECT_EQ(j.at("metric"), "accuracy");
  EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 7u);
  EXPECT_GE(j.at("value").get<double>(), 0.0);
  EXPECT_LE(j.at("value").get<double>(), 1.0);
  const CondensedGraph c = load_condensed(out / "seed_7" / "condensed" / "src_0");
  EXPECT_EQ(c.features.rows(), 3u);
}

TEST(Pipeline, RerunAndResumeAreByteIdentical) {
  const auto a = testing::fresh_dir("pipeline_a");
  const auto b = testing::fresh_dir("pipeline_b");
  ExperimentConfig cfg = small_config();
  cfg.num_sources = 3;
  cfg.seeds = {1, 2};
  run_pipeline(cfg, a);
  run_pipeline(cfg, b);
  const std::string first = read_file(a / "results.jsonl");
  EXPECT_EQ(first, read_file(b / "results.jsonl"));
  // Resume: drop the backbone and one condensed set, keep the rest.
  fs::remove_all(a / "seed_1" / "backbone");
  fs::remove_all(a / "seed_2" / "condensed" / "src_1");
  run_pipeline(cfg, a);
  EXPECT_EQ(read_file(a / "results.jsonl"), first);
}

TEST(Pipeline, LinkTaskReportsAuroc) {
  const auto out = testing::fresh_dir("pipeline_link");
  ExperimentConfig cfg = small_config();
  cfg.task = Task::kLink;
  const auto reports = run_pipeline(cfg, out);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].metric, "auroc");
  EXPECT_GE(reports[0].value, 0.0);
  EXPECT_LE(reports[0].value, 1.0);
}

TEST(Pipeline, StageFailureWritesErrorJson) {
  const auto out = testing::fresh_dir("pipeline_fail");
  ExperimentConfig cfg = small_config();
  cfg.dataset = (out / "missing_bundle").string();
  try {
    run_pipeline(cfg, out);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "prepare");
  }
  const auto j = nlohmann::json::parse(read_file(out / "error.json"));
  EXPECT_EQ(j.at("stage"), "prepare");
  EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 7u);
  EXPECT_FALSE(j.at("error").get<std::string>().empty());
}

TEST(Sweep, CsvCoversGridAndSvgNumbersComeFromCsv) {
  ExperimentConfig cfg = small_config();
  cfg.seeds = {0, 1};
  cfg.noise_rates = {0.0, 0.5};
  const SweepReport r = run_noise_sweep(cfg);
  EXPECT_EQ(r.cells.size(), 2u * 2u * 2u);
  for (const auto& c : r.cells) EXPECT_TRUE(c.ok) << c.error;
  const std::string csv = sweep_csv(r);
  const std::string svg = sweep_svg(r);
  const auto rows = lines_of(csv);
  EXPECT_EQ(rows[0], "dataset,task,method,noise_rate,sources,seed,metric,value");
  std::set<std::string> csv_fields;
  for (const auto& row : rows) {
    std::istringstream in(row);
    for (std::string f; std::getline(in, f, ',');) csv_fields.insert(f);
  }
  const std::regex attr(R"re(data-(?:noise|mean|std)="([^"]*)")re");
  std::size_t seen = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), attr); it != std::sregex_iterator(); ++it) {
    EXPECT_EQ(csv_fields.count((*it)[1].str()), 1u) << (*it)[1].str();
    ++seen;
  }
  EXPECT_EQ(seen, 3u * 2u * 2u);  // (noise, mean, std) per point
  const std::regex text(R"re(<text[^>]*>([-0-9.e]+)</text>)re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), text); it != std::sregex_iterator(); ++it) {
    EXPECT_EQ(csv_fields.count((*it)[1].str()), 1u) << (*it)[1].str();
  }
  // Means in the summary equal the mean of the per-seed cells.
  for (const auto& s : r.summary) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& c : r.cells) {
      if (c.method == s.method && c.noise_rate == s.noise_rate) {
        sum += c.value;
        ++n;
      }
    }
    EXPECT_NEAR(s.mean, sum / static_cast<double>(n), 1e-15);
  }
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PLGC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, StagewiseRunMatchesArtifacts) {
  const auto dir = testing::fresh_dir("cli_stages");
  write_file_atomic(dir / "exp.cfg",
                    "sbm_nodes_per_block = 40\nratio = 0.025\npretrain_epochs = 20\nhidden_dim = 16\n"
                    "embed_dim = 8\ncondense_steps = 30\nbackbone_epochs = 30\nseeds = [3]\n");
  const std::string cfg = "--config " + (dir / "exp.cfg").string();
  ASSERT_EQ(run_cli(cfg + " --out " + (dir / "g").string() + " gen-sbm"), 0);
  EXPECT_TRUE(fs::exists(dir / "g" / "features.tsv"));
  ASSERT_EQ(run_cli(cfg + " --out " + (dir / "p").string() + " pretrain --graph " + (dir / "g").string()), 0);
  ASSERT_EQ(run_cli(cfg + " --out " + (dir / "c").string() + " condense --graph " + (dir / "g").string() +
                    " --pretrain " + (dir / "p").string()),
            0);
  ASSERT_EQ(run_cli(cfg + " --out " + (dir / "b").string() + " backbone --condensed " + (dir / "c").string()), 0);
  ASSERT_EQ(run_cli(cfg + " --out " + (dir / "h").string() + " finetune --graph " + (dir / "g").string() +
                    " --backbone " + (dir / "b").string()),
            0);
  ASSERT_EQ(run_cli(cfg + " --out " + (dir / "e").string() + " eval --graph " + (dir / "g").string() +
                    " --backbone " + (dir / "b").string() + " --head " + (dir / "h").string()),
            0);
  const auto j = nlohmann::json::parse(read_file(dir / "e" / "results.jsonl"));
  EXPECT_EQ(j.at("metric"), "accuracy");
}

TEST(Cli, PipelineSweepAndTheoryCommands) {
  const auto dir = testing::fresh_dir("cli_cmds");
  write_file_atomic(dir / "exp.cfg",
                    "sbm_nodes_per_block = 30\nratio = 0.034\npretrain_epochs = 10\nhidden_dim = 16\n"
                    "embed_dim = 8\ncondense_steps = 20\nbackbone_epochs = 20\nseeds = [0, 1]\n"
                    "noise_rates = [0.0, 0.9]\n");
  const std::string cfg = "--config " + (dir / "exp.cfg").string();
  EXPECT_EQ(run_cli(cfg + " --out " + (dir / "pipe").string() + " --seed 5 pipeline"), 0);
  EXPECT_TRUE(fs::exists(dir / "pipe" / "seed_5" / "report.json"));
  EXPECT_EQ(run_cli(cfg + " --out " + (dir / "sweep").string() + " --workers 2 sweep-noise"), 0);
  EXPECT_TRUE(fs::exists(dir / "sweep" / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "sweep" / "sweep.svg"));

  write_file_atomic(dir / "theory.cfg", "trials = 100\nstationarity_trials = 10\n");
  EXPECT_EQ(run_cli("--config " + (dir / "theory.cfg").string() + " --out " + (dir / "th").string() +
                    " validate-theory"),
            0);
  const auto j = nlohmann::json::parse(read_file(dir / "th" / "theory_report.json"));
  EXPECT_TRUE(j.contains("stationarity"));
  EXPECT_TRUE(fs::exists(dir / "th" / "theory_deviations.csv"));
}

TEST(Cli, ExitCodes) {
  const auto dir = testing::fresh_dir("cli_codes");
  write_file_atomic(dir / "bad.cfg", "ratoi = 0.1\n");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.cfg").string() + " pipeline"), 2);
  write_file_atomic(dir / "missing.cfg", "dataset = \"" + (dir / "nope").string() + "\"\nseeds = [0]\n");
  EXPECT_EQ(run_cli("--config " + (dir / "missing.cfg").string() + " --out " + (dir / "o").string() + " pipeline"),
            1);
  EXPECT_TRUE(fs::exists(dir / "o" / "error.json"));
  EXPECT_NE(run_cli("no-such-command"), 0);
}

}  // namespace
}  // namespace plgc
