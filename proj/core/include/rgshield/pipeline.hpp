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
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "rgshield/artifacts.hpp"
#include "rgshield/errors.hpp"
#include "rgshield/fim.hpp"
#include "rgshield/trainer.hpp"

namespace rgshield {

struct ExperimentConfig {
  std::string task_name = "copy";
  int n = 2;
  std::uint64_t task_seed = 0;
  int depth = 2;
  TrainingConfig trainer;
  std::string basis = "complete";
  double fd_step = kDefaultFdStep;
  double tol_eig = kDefaultTolEig;
  double fixed_point_tol = kDefaultFixedPointTol;
  int fixed_point_window = kDefaultFixedPointWindow;
  FimMethod fim_method = FimMethod::kChainRule;
  // Multiplies the trained victim's parameters before analysis.
  double victim_scale = 1.0;
  double budget = 0.05;
  int clone_depth = 0;  // 0: same as the victim
  std::vector<std::uint64_t> attack_seeds{1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "bundle";

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Canonical JSON of every field that affects results (output_dir excluded).
  std::string canonical_json() const;
  std::string hash() const;
};

/// Strict parse; unknown fields and out-of-range values are SchemaErrors.
ExperimentConfig experiment_config_from_json(std::string_view text);

/// A pipeline stage failed; artifacts written by earlier stages are kept.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Bundle artifacts carry different config hashes.
class MixedProvenanceError : public Error {
 public:
  using Error::Error;
};

using StageLogger = std::function<void(std::string_view stage)>;

/// gen-task → train → stability (both directions) → fim → poison → clone →
/// summary, writing every artifact into config.output_dir. Returns the
/// written file names in write order.
std::vector<std::string> full_pipeline(const ExperimentConfig& config, const StageLogger& log = {});

/// Reads the provenance stamp of one artifact (JSON field or '#' comment line).
ArtifactMeta artifact_meta(const std::filesystem::path& path);

/// Schema self-check by extension: .json (object with provenance; model
/// documents load strictly), .jsonl (dataset), .csv (provenance line, header,
/// rectangular numeric rows). Throws SchemaError.
void validate_artifact(const std::filesystem::path& path);

/// Checks every artifact in a bundle shares one config hash and summarizes
/// it as JSON. Throws MixedProvenanceError otherwise.
std::string bundle_report(const std::filesystem::path& bundle);

}  // namespace rgshield
