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

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rgshield/artifacts.hpp"
#include "rgshield/hamiltonian.hpp"
#include "rgshield/rbm.hpp"
#include "rgshield/stability.hpp"

namespace rgshield {

/// Couplings g̃^(N−1) of t_N(h_{N−1} | y) in closed form, plus ∂g̃^(N−1)/∂y.
/// Only singleton operators are nonzero: g_{j} = −((yᵀW_N)_j + b_{N,j}) and
/// ∂g_{j}/∂y_i = −W_N(i, j).
struct LastLayerCouplings {
  CouplingVector couplings;
  Eigen::MatrixXd jacobian;  // basis size × n
};

/// Requires every singleton subset in the basis.
LastLayerCouplings last_layer_couplings(const RbmStack& stack, std::span<const double> y,
                                        const BasisPtr& basis);

/// J = ∂g̃^(0)/∂y = T̃^(1)···T̃^(N−1) · ∂g̃^(N−1)/∂y, stability matrices taken
/// along the generation flow at y.
Eigen::MatrixXd coupling_jacobian(const RbmStack& stack, std::span<const double> y, const BasisPtr& basis,
                                  double fd_step = kDefaultFdStep);

/// Cov(O_α, O_β) under `dist`, by enumeration.
Eigen::MatrixXd operator_covariance(const Distribution& dist, const OperatorBasis& basis);

enum class FimMethod { kChainRule, kScoreOracle };

std::string_view to_string(FimMethod m);
// "chain" / "chain-rule", "oracle" / "score-oracle".
FimMethod parse_fim_method(std::string_view text);

struct FimResult {
  std::vector<double> y;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalues(i)
  FimMethod method = FimMethod::kChainRule;
  std::vector<std::string> warnings;
};

/// Fisher information of q̃_0(·|y) with respect to y.
/// Chain rule: F = Jᵀ C J with C the operator covariance under q̃_0(·|y).
/// Score oracle: F = Σ_x q̃_0 s sᵀ with s = ∂ log q̃_0 / ∂y from a fourth-order
/// central stencil of width `fd_step`. The chain rule needs a complete basis.
FimResult fim(const RbmStack& stack, std::span<const double> y, FimMethod method,
              double fd_step = kDefaultFdStep);

/// Symmetrizes and eigen-decomposes; records an asymmetry warning.
FimResult decompose_fim(std::vector<double> y, Eigen::MatrixXd matrix, FimMethod method);

struct PoisonVector {
  std::vector<double> delta_y;
  double budget = 0.0;
  double source_eigenvalue = 0.0;
};

// Eigenvalues within this of the top one are treated as tied.
inline constexpr double kEigenTieTol = 1e-9;
// Top eigenvalues at or below this count as a zero matrix.
inline constexpr double kZeroFimTol = 1e-12;

/// Response used to break ties between degenerate top eigenvectors; larger is
/// stronger.
using ResponseFn = std::function<double(std::span<const double> delta_y)>;

/// delta_y = budget · v / max|v| for the top eigenvector v, first nonzero
/// component positive. Throws NoUnstableDirectionError when F is numerically
/// zero.
PoisonVector strongest_poison(const FimResult& fim, double budget, const ResponseFn& response = {});

/// D_KL(q̃_0(·|y) ‖ q̃_0(·|y + delta)).
double generation_discrepancy(const RbmStack& stack, std::span<const double> y,
                              std::span<const double> delta);

std::string fim_json(const std::vector<FimResult>& results, const ArtifactMeta* meta = nullptr);

}  // namespace rgshield
