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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "rgshield/clone.hpp"
#include "rgshield/tasks.hpp"
#include "support/oracles.hpp"

namespace rgshield {
namespace {

const RbmStack& copy_victim() {
  static const RbmStack victim = train_layerwise(2, 2, make_task("copy", 2, 0), TrainingConfig{}).stack;
  return victim;
}

TEST(CloneTrain, CleanCopyLabelsAreLearned) {
  const auto task = make_task("copy", 2, 0);
  const auto clone = clone_train(victim_observations(copy_victim(), task), 2, TrainingConfig{}, 1);
  EXPECT_GE(decode_accuracy(clone.stack, task), 0.9);
}

TEST(CloneTrain, DeterministicAndRejectsEmpty) {
  TrainingConfig config;
  config.max_sweeps = 10;
  const auto obs = make_task("copy", 2, 0);
  const auto a = clone_train(obs, 2, config, 4);
  const auto b = clone_train(obs, 2, config, 4);
  EXPECT_EQ(a.stack.layer(1).W, b.stack.layer(1).W);
  EXPECT_EQ(a.stack.layer(2).b, b.stack.layer(2).b);
  EXPECT_EQ(a.stack.seed(), 4u);
  EXPECT_THROW(clone_train(Dataset(), 2, config, 1), std::invalid_argument);
}

TEST(CompareModels, IdentityAndChance) {
  const auto task = make_task("copy", 2, 0);
  const auto self = compare_models(copy_victim(), copy_victim(), task.pairs());
  EXPECT_EQ(self.output_kl, 0.0);
  EXPECT_EQ(self.agreement, 1.0);
  // A zero clone decodes every input to state 0, agreeing with the copy
  // victim on one of four inputs: chance level 0.5 per bit.
  const auto zero = compare_models(copy_victim(), RbmStack::zeros(2, 2), task.pairs());
  EXPECT_DOUBLE_EQ(zero.agreement, 0.25);
  EXPECT_DOUBLE_EQ(zero.misclassification, 0.75);
  EXPECT_GT(zero.output_kl, 0.0);
}

TEST(CompareModels, OrderInvariant) {
  const auto task = make_task("copy", 2, 0);
  const auto other = oracle::random_stack(3, 2, 2);
  std::vector<LabeledExample> eval(task.pairs().begin(), task.pairs().end());
  const auto a = compare_models(copy_victim(), other, eval);
  std::reverse(eval.begin(), eval.end());
  const auto b = compare_models(copy_victim(), other, eval);
  EXPECT_NEAR(a.output_kl, b.output_kl, 1e-15);
  EXPECT_EQ(a.agreement, b.agreement);
  EXPECT_EQ(a.misclassification, b.misclassification);
  EXPECT_GE(a.agreement, 0.0);
  EXPECT_LE(a.agreement, 1.0);
}

TEST(AttackExperiment, ZeroBudgetConditionsCoincide) {
  AttackConfig config;
  config.trainer.max_sweeps = 15;
  config.poison.budget = 0.0;
  config.seeds = {1, 2};
  const auto report = attack_experiment(copy_victim(), make_task("copy", 2, 0), config);
  EXPECT_FALSE(report.poisoning_available);
  ASSERT_EQ(report.clean.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(report.clean[i].seed, report.poisoned[i].seed);
    EXPECT_EQ(report.clean[i].residual, report.poisoned[i].residual);
    EXPECT_EQ(report.clean[i].metrics.output_kl, report.poisoned[i].metrics.output_kl);
    EXPECT_EQ(report.clean[i].output_kl_trace, report.poisoned[i].output_kl_trace);
  }
  EXPECT_EQ(report.residual_gap, 0.0);
}

TEST(AttackExperiment, ReproducibleAndMonitored) {
  AttackConfig config;
  config.seeds = {1, 2, 3};
  const auto task = make_task("copy", 2, 0);
  const auto a = attack_experiment(copy_victim(), task, config);
  const auto b = attack_experiment(copy_victim(), task, config);
  EXPECT_EQ(clone_report_json(a), clone_report_json(b));
  EXPECT_EQ(clone_summary_csv(a), clone_summary_csv(b));
  for (const auto& run : a.clean) {
    ASSERT_FALSE(run.output_kl_trace.empty());
    for (double kl : run.output_kl_trace) EXPECT_TRUE(std::isfinite(kl));
    EXPECT_LT(run.output_kl_trace.back(), run.output_kl_trace.front());
  }
  for (const auto* runs : {&a.clean, &a.poisoned}) {
    for (const auto& run : *runs) {
      EXPECT_GE(run.metrics.output_kl, 0.0);
      EXPECT_GE(run.metrics.misclassification, 0.0);
      EXPECT_LE(run.metrics.misclassification, 1.0);
    }
  }
}

TEST(CloneSummaryCsv, Columns) {
  CloneReport report;
  report.clean.push_back({"clean", 1, 0.5, 3, true, {0.1, 1.0, 0.0}, {}});
  const auto csv = clone_summary_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "condition,seed,residual,output_kl,misclassification,agreement");
  EXPECT_NE(csv.find("clean,1,0.5,0.10000000000000001,0.0,1.0"), std::string::npos) << csv;
}

}  // namespace
}  // namespace rgshield
