// Copyright 2026 The rgshield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "rgshield/artifacts.hpp"
#include "rgshield/errors.hpp"
#include "rgshield/model_io.hpp"
#include "rgshield/pipeline.hpp"
#include "support/oracles.hpp"

namespace rgshield {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("rgshield_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  fs::path path_;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig c;
  c.trainer.max_sweeps = 20;
  c.attack_seeds = {1, 2};
  c.output_dir = dir;
  return c;
}

TEST(ExperimentConfig, StrictParse) {
  const auto c = experiment_config_from_json(R"({"task": {"name": "parity", "n": 3}, "N": 3,
      "poison": {"budget": 0.1}, "attack": {"seeds": [7]}})");
  EXPECT_EQ(c.task_name, "parity");
  EXPECT_EQ(c.n, 3);
  EXPECT_EQ(c.depth, 3);
  EXPECT_EQ(c.attack_seeds, std::vector<std::uint64_t>{7});
  EXPECT_THROW(experiment_config_from_json(R"({"tsk": {}})"), SchemaError);
  EXPECT_THROW(experiment_config_from_json(R"({"poison": {"budget": 0.7}})"), SchemaError);
  try {
    experiment_config_from_json(R"({"trainer": {"learning_rate": "fast"}})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(e.path().find("trainer.learning_rate"), std::string::npos) << e.path();
  }
}

TEST(ExperimentConfig, HashIgnoresOutputDir) {
  ExperimentConfig a, b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.budget = 0.06;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(FullPipeline, BundleIsStampedAndValid) {
  const TempDir dir("bundle");
  const auto config = small_config(dir.path());
  std::vector<std::string> stages;
  const auto files = full_pipeline(config, [&](std::string_view s) { stages.emplace_back(s); });
  EXPECT_FALSE(stages.empty());
  for (const auto& f : {"config.json", "task.jsonl", "victim_model.json", "objective_trace.csv", "fim.json",
                        "poison_report.json", "clone_report.json", "clone_summary.csv", "summary.json"}) {
    EXPECT_NE(std::find(files.begin(), files.end(), f), files.end()) << f;
  }
  for (const auto& f : files) {
    EXPECT_NO_THROW(validate_artifact(dir.path() / f)) << f;
    EXPECT_EQ(artifact_meta(dir.path() / f).config_hash, config.hash()) << f;
    EXPECT_EQ(artifact_meta(dir.path() / f).tool_version, kToolVersion) << f;
  }
  const auto summary = nlohmann::json::parse(read_text_file(dir.path() / "summary.json"));
  EXPECT_TRUE(summary.contains("vulnerability"));
  EXPECT_TRUE(summary.contains("defence"));
  EXPECT_TRUE(summary.contains("attack"));
  const auto report = nlohmann::json::parse(bundle_report(dir.path()));
  EXPECT_EQ(report["config_hash"], config.hash());

  // Tampering with one artifact's stamp mixes provenance.
  auto text = read_text_file(dir.path() / "fim.json");
  text.replace(text.find(config.hash()), config.hash().size(), "ffffffffffffffff");
  write_text_file(dir.path() / "fim.json", text);
  EXPECT_THROW(bundle_report(dir.path()), MixedProvenanceError);
}

TEST(FullPipeline, ZeroBudgetConditionsIdentical) {
  const TempDir dir("zero");
  auto config = small_config(dir.path());
  config.budget = 0.0;
  full_pipeline(config);
  const auto summary = nlohmann::json::parse(read_text_file(dir.path() / "summary.json"));
  EXPECT_EQ(summary["attack"]["conditions_identical"], true);
}

TEST(FullPipeline, StageFailureNamesStageAndKeepsArtifacts) {
  const TempDir dir("stage");
  // A directory squatting on fim.json makes that write fail.
  fs::create_directories(dir.path() / "fim.json");
  try {
    full_pipeline(small_config(dir.path()));
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "fim");
  }
  EXPECT_TRUE(fs::exists(dir.path() / "victim_model.json"));
  EXPECT_FALSE(fs::exists(dir.path() / "summary.json"));
}

TEST(ValidateArtifact, RejectsBrokenCsv) {
  const TempDir dir("csv");
  write_text_file(dir.path() / "bad.csv", "# config_hash=0123456789abcdef tool_version=0.1.0\na,b\n1,2,3\n");
  EXPECT_THROW(validate_artifact(dir.path() / "bad.csv"), SchemaError);
  write_text_file(dir.path() / "nometa.csv", "a,b\n1,2\n");
  EXPECT_THROW(validate_artifact(dir.path() / "nometa.csv"), SchemaError);
}

TEST(Cli, TrainWritesModelAndTrace) {
  const TempDir dir("train");
  ASSERT_EQ(cli_run({"gen-task", "--name", "copy", "--n", "2", "--out", dir / "task.jsonl"}).code, 0);
  write_text_file(dir.path() / "trainer.json", R"({"max_sweeps": 10})");
  const auto r = cli_run({"--validate", "train", "--task", dir / "task.jsonl", "--N", "2", "--config",
                          dir / "trainer.json", "--out", dir / "model.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "model_trace.csv"));
  EXPECT_NE(r.err.find("config_hash="), std::string::npos);
  EXPECT_NE(r.err.find("seed="), std::string::npos);
  const auto stack = load_model_file(dir.path() / "model.json");
  EXPECT_EQ(stack.depth(), 2);
}

TEST(Cli, FimBothReportsDifference) {
  const TempDir dir("fim");
  // Trained stacks of this depth collapse to a near-zero Fisher matrix, so
  // use random weights to get a well-conditioned comparison.
  write_text_file(dir.path() / "model.json", save_model(oracle::random_stack(4, 2, 3)));
  const auto r = cli_run({"fim", "--model", dir / "model.json", "--y", "10", "--method", "both"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc["results"].size(), 2u);
  EXPECT_EQ(doc["results"][0]["method"], "chain-rule");
  EXPECT_EQ(doc["results"][1]["method"], "score-oracle");
  // Recompute the difference from the two emitted matrices.
  double diff = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double d = doc["results"][0]["matrix"][i][j].get<double>() - doc["results"][1]["matrix"][i][j].get<double>();
      diff += d * d;
    }
  }
  EXPECT_NEAR(doc["frobenius_difference"].get<double>(), std::sqrt(diff), 1e-15);
  EXPECT_LE(doc["relative_frobenius_difference"].get<double>(), 1e-3);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli_run({}).code, 2);
  const auto bad = cli_run({"gen-task", "--bogus"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli_run({"gen-task", "--name", "nope"}).code, 2);
  EXPECT_EQ(cli_run({"--version"}).code, 0);
  EXPECT_EQ(cli_run({"train", "--task", "/nonexistent/task.jsonl", "--out", "/tmp/x.json"}).code, 1);

  const TempDir dir("exit");
  write_text_file(dir.path() / "broken.json", "{\"format_version\": 1,");
  EXPECT_EQ(cli_run({"fim", "--model", dir / "broken.json", "--y", "1"}).code, 2);
  // A zero Fisher matrix is a result, not an error.
  write_text_file(dir.path() / "zero.json", save_model(RbmStack::zeros(2, 2)));
  EXPECT_EQ(cli_run({"fim", "--model", dir / "zero.json", "--y", "10"}).code, 0);
  // Labels outside [0,1] in a dataset are schema errors.
  write_text_file(dir.path() / "bad.jsonl", "{\"x\": [0], \"y\": [2], \"w\": 1}\n");
  EXPECT_EQ(cli_run({"train", "--task", dir / "bad.jsonl", "--out", dir / "m.json"}).code, 2);
}

TEST(Cli, ReportRefusesMixedHashes) {
  const TempDir dir("mixed");
  ASSERT_EQ(cli_run({"gen-task", "--name", "copy", "--out", dir / "a.jsonl"}).code, 0);
  ASSERT_EQ(cli_run({"gen-task", "--name", "parity", "--out", dir / "b.jsonl"}).code, 0);
  const auto r = cli_run({"report", "--bundle", dir.path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("MixedProvenanceError"), std::string::npos);
}

TEST(Cli, CouplingsAndStabilityOutputs) {
  const TempDir dir("flow");
  write_text_file(dir.path() / "zero.json", save_model(RbmStack::zeros(2, 3)));
  const auto c = cli_run({"couplings", "--model", dir / "zero.json", "--direction", "gen", "--cond", "11"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(c.out.find("layer_index,\"g{0}\""), std::string::npos);
  const auto s = cli_run({"stability", "--model", dir / "zero.json", "--direction", "class", "--cond", "01"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(nlohmann::json::parse(s.out)["has_relevant"], false);
  const auto p = cli_run({"propagate", "--model", dir / "zero.json", "--x", "01"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(cli_run({"propagate", "--model", dir / "zero.json", "--x", "01", "--y", "1,0"}).code, 2);
}

}  // namespace
}  // namespace rgshield
