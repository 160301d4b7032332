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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgshield/artifacts.hpp"
#include "rgshield/poison.hpp"
#include "rgshield/rbm.hpp"
#include "rgshield/state.hpp"
#include "rgshield/trainer.hpp"

namespace rgshield {

struct AttackConfig {
  int depth = 0;  // clone depth; 0 copies the victim's
  TrainingConfig trainer;
  PoisonOptions poison;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

/// Trains an attacker's replica on observed pairs with `seed` in place of the
/// trainer seed. Throws std::invalid_argument on empty observations.
TrainingResult clone_train(const Dataset& observations, int depth, const TrainingConfig& trainer,
                           std::uint64_t seed);

struct ModelComparison {
  double output_kl = 0.0;          // mean of D_KL(q_N^victim ‖ q_N^clone)
  double agreement = 0.0;          // fraction with equal argmax decodes
  double misclassification = 0.0;  // clone decode != rounded eval label
};

/// Functional comparison over the eval inputs, each counted once.
ModelComparison compare_models(const RbmStack& victim, const RbmStack& clone,
                               std::span<const LabeledExample> eval);

struct CloneRun {
  std::string condition;  // "clean" or "poisoned"
  std::uint64_t seed = 0;
  double residual = 0.0;  // final summed training objective
  int sweeps = 0;
  bool converged = false;
  ModelComparison metrics;
  std::vector<double> output_kl_trace;  // output KL after every sweep
};

struct ConditionSummary {
  double residual_mean = 0.0, residual_std = 0.0;
  double output_kl_mean = 0.0, output_kl_std = 0.0;
  double misclassification_mean = 0.0, misclassification_std = 0.0;
  double agreement_mean = 0.0, agreement_std = 0.0;
};

struct CloneReport {
  double budget = 0.0;
  bool poisoning_available = false;  // some label was actually poisoned
  PoisonResult poison;
  Dataset clean_observations;
  std::vector<CloneRun> clean;     // seed order
  std::vector<CloneRun> poisoned;  // seed order, paired with `clean`
  ConditionSummary clean_summary;
  ConditionSummary poisoned_summary;
  double residual_gap = 0.0;  // poisoned minus clean mean residual
};

/// Victim-labelled observations: (x, argmax decode of q_N(·|x)) with the
/// task's weights.
Dataset victim_observations(const RbmStack& victim, const Dataset& task);

/// Paired clean/poisoned cloning over config.seeds. Misclassification is
/// measured against the task labels. Runs execute concurrently and are
/// assembled in seed order.
CloneReport attack_experiment(const RbmStack& victim, const Dataset& task, const AttackConfig& config);

std::string clone_report_json(const CloneReport& report, const ArtifactMeta* meta = nullptr);
/// Columns: condition, seed, residual, output_kl, misclassification, agreement.
std::string clone_summary_csv(const CloneReport& report, const std::string& meta_line = "");

}  // namespace rgshield
