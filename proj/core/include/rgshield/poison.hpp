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

#include <string>
#include <vector>

#include "rgshield/artifacts.hpp"
#include "rgshield/fim.hpp"
#include "rgshield/rbm.hpp"
#include "rgshield/state.hpp"

namespace rgshield {

inline constexpr double kDefaultPoisonBudget = 0.05;

struct PoisonOptions {
  double budget = kDefaultPoisonBudget;
  FimMethod method = FimMethod::kChainRule;
  double fd_step = kDefaultFdStep;
};

/// One distinct clean label and what was done to it.
struct PoisonEntry {
  std::vector<double> y;
  // Applied perturbation: poisoned label minus y. Components that would leave
  // [0,1] are clipped, so its max-norm can fall below the budget.
  std::vector<double> delta_y;
  double top_eigenvalue = 0.0;
  double kl_discrepancy = 0.0;  // D_KL(q̃_0(·|y) ‖ q̃_0(·|y + delta_y))
  bool decode_ok = true;
  bool poisoned = false;  // false when F was zero or the budget is 0
};

struct PoisonResult {
  Dataset dataset;
  std::vector<PoisonEntry> entries;  // first-appearance order of the labels
  double budget = 0.0;
};

/// Poisons every distinct clean label along its strongest Fisher direction.
/// The sign of the eigenvector is chosen to maximize the discrepancy after
/// clipping to [0,1]. Requires 0 ≤ budget < 0.5 and binary labels; budget 0
/// returns the labels unchanged. Labels with a zero Fisher matrix pass through
/// unpoisoned.
PoisonResult poison_dataset(const RbmStack& stack, const Dataset& clean, const PoisonOptions& options = {});

std::string poison_report_json(const PoisonResult& result, const ArtifactMeta* meta = nullptr);

}  // namespace rgshield
