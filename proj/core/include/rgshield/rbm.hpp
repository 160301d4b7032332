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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rgshield/state.hpp"

namespace rgshield {

enum class Direction { kClassification, kGeneration };

std::string_view to_string(Direction d);
// Accepts "classification"/"class"/"c" and "generation"/"gen"/"g".
Direction parse_direction(std::string_view text);

/// One RBM: joint over (h_k, h_{k-1}) proportional to
/// exp(h_kᵀ W h_{k-1} + aᵀ h_k + bᵀ h_{k-1}).
struct RbmLayer {
  Eigen::MatrixXd W;  // W(i, j) couples h_k[i] with h_{k-1}[j]
  Eigen::VectorXd a;  // bias on h_k
  Eigen::VectorXd b;  // bias on h_{k-1}

  static RbmLayer zeros(int n);
  int dim() const { return static_cast<int>(a.size()); }
  // Throws std::invalid_argument on non-square shapes or non-finite entries.
  void validate() const;
};

struct TrainingProvenance {
  double objective_final = 0.0;
  int sweeps = 0;
  std::string config_hash;
};

/// N layers of uniform width n; layer k (1-based) connects h_{k-1} to h_k.
class RbmStack {
 public:
  RbmStack() = default;
  RbmStack(int n, std::vector<RbmLayer> layers, std::uint64_t seed = 0,
           TrainingProvenance training = {});

  static RbmStack zeros(int n, int depth);

  int dim() const { return n_; }
  int depth() const { return static_cast<int>(layers_.size()); }
  const RbmLayer& layer(int k) const;
  std::span<const RbmLayer> layers() const { return layers_; }
  void set_layer(int k, RbmLayer layer);

  std::uint64_t seed() const { return seed_; }
  const TrainingProvenance& training() const { return training_; }
  void set_training(TrainingProvenance training) { training_ = std::move(training); }

  // Multiplies every W, a and b by `factor`.
  RbmStack scaled(double factor) const;

 private:
  int n_ = 0;
  std::vector<RbmLayer> layers_;
  std::uint64_t seed_ = 0;
  TrainingProvenance training_;
};

/// Unnormalized log-weights h_kᵀ W h_{k-1} + aᵀ h_k + bᵀ h_{k-1} over the
/// 2n-bit joint, index = index(h_k) + 2^n · index(h_{k-1}).
std::vector<double> joint_energies(const RbmLayer& layer);

/// Normalized joint; log_norm() is log z_k.
Distribution joint_distribution(const RbmLayer& layer);

/// Independent Bernoulli bits with P(h_i = 1) = logistic(logits_i).
Distribution bernoulli_product(std::span<const double> logits);

/// t_k(h_k | h_{k-1}).
Distribution forward_conditional(const RbmLayer& layer, const BinaryState& h_prev);

/// t_k(h_{k-1} | h_k), extended to real-valued h_k through the bilinear energy.
Distribution backward_conditional(const RbmLayer& layer, std::span<const double> h_next);
Distribution backward_conditional(const RbmLayer& layer, const BinaryState& h_next);
Distribution backward_conditional(const RbmLayer& layer, const OutputVector& h_next);

/// Multilinear extension of the clamp δ_{h,y} to y in [0,1]^n: a product of
/// Bernoulli(y_i). Equals the delta distribution for binary y. Components
/// outside [0,1] are clipped.
Distribution clamp_distribution(std::span<const double> y);

/// Column j holds the layer's conditional given state j: forward transfer maps
/// h_{k-1} to h_k, generation transfer maps h_k to h_{k-1}.
Eigen::MatrixXd transfer_matrix(const RbmLayer& layer, Direction direction);

/// q_out(h) = Σ_{h'} transfer(h, h') q(h').
Distribution propagate_step(const Eigen::MatrixXd& transfer, const Distribution& q);

/// Per-layer distributions conditioned on x (classification) or y (generation).
/// `dists[k]` is the distribution of h_k for k = 0..N in both directions. For
/// generation, dists[N] is clamp_distribution(y); the N-th step itself uses
/// the continuous extension of the backward conditional at y.
struct ConditionedFlow {
  Direction direction = Direction::kClassification;
  std::vector<double> conditioning;
  std::vector<Distribution> dists;
};

ConditionedFlow classify_propagate(const RbmStack& stack, const BinaryState& x);
ConditionedFlow generate_propagate(const RbmStack& stack, std::span<const double> y);
ConditionedFlow generate_propagate(const RbmStack& stack, const OutputVector& y);

/// q̃_0(x | y) for real-valued y, without materializing the intermediate flow.
Distribution generated_distribution(const RbmStack& stack, std::span<const double> y);

/// q_N(· | x).
Distribution classified_distribution(const RbmStack& stack, const BinaryState& x);

}  // namespace rgshield
