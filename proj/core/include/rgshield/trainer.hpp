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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rgshield/rbm.hpp"
#include "rgshield/state.hpp"

namespace rgshield {

struct TrainingConfig {
  double learning_rate = 2.0;  // initial step; halved on objective increase
  int max_sweeps = 500;
  int inner_steps = 20;        // gradient steps per layer visit
  double tol = 1e-10;          // stop when a sweep improves the objective by less
  std::uint64_t seed = 1;
  double init_scale = 1.0;     // weights start uniform in [-init_scale, init_scale]

  void validate() const;
  std::string to_json() const;
  // FNV-1a of to_json().
  std::string hash() const;
};

/// Strict parse: unknown fields are SchemaErrors; missing fields keep defaults.
TrainingConfig training_config_from_json(std::string_view text, const std::string& path = "");

/// The pair distribution a single layer is fitted to, over (h_k, h_{k-1}) with
/// the joint_distribution index convention.
struct LayerTarget {
  Distribution joint;
};

/// p(x, y) as weighted pairs. Throws std::invalid_argument when empty.
std::vector<LabeledExample> assemble_joint(const Dataset& data);

/// r(h_k, h_{k-1}) = Σ p(x,y) q̃_k(h_k | y) q_{k-1}(h_{k-1} | x), where
/// q_0 = δ_x and q̃_N is the clamp at y (clamp_distribution for soft y).
LayerTarget layer_target(const RbmStack& stack, int k, std::span<const LabeledExample> joint);

struct LayerGradient {
  Eigen::MatrixXd dW;
  Eigen::VectorXd da;
  Eigen::VectorXd db;
  double max_abs() const;
};

/// D_KL(target || t_k) in nats.
double layer_objective(const RbmLayer& layer, const LayerTarget& target);

/// Exact gradient of layer_objective: model moments minus target moments.
LayerGradient kl_gradient(const RbmLayer& layer, const LayerTarget& target);

/// Σ_k D_KL(r_k || t_k) with every target recomputed from `stack`.
double stack_objective(const RbmStack& stack, std::span<const LabeledExample> joint);

struct StepRecord {
  int sweep = 0;
  int layer = 0;
  double objective = 0.0;  // layer objective after the accepted step
};

struct TrainingResult {
  RbmStack stack;
  double initial_objective = 0.0;
  std::vector<double> sweep_objectives;  // summed objective after each sweep
  std::vector<StepRecord> steps;         // every accepted step, in order
  bool converged = false;
};

using SweepObserver = std::function<void(int sweep, const RbmStack& stack)>;

/// Layerwise descent on D_KL(r_k || t_k), sweeping k = 1..N. Targets are
/// recomputed once per layer visit. Throws TrainingDivergenceError when the
/// objective stops being finite.
TrainingResult train_layerwise(int n, int depth, const Dataset& data, const TrainingConfig& config,
                               const SweepObserver& observer = {});

/// Weighted fraction of examples whose argmax-decoded q_N(·|x) equals the
/// rounded label.
double decode_accuracy(const RbmStack& stack, const Dataset& data);

std::string objective_trace_csv(const TrainingResult& result, const std::string& meta_line = "");

}  // namespace rgshield
