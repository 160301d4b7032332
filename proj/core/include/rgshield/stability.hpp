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

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgshield/artifacts.hpp"
#include "rgshield/hamiltonian.hpp"
#include "rgshield/rbm.hpp"

namespace rgshield {

inline constexpr double kDefaultFdStep = 1e-4;
inline constexpr double kDefaultTolEig = 1e-6;

/// One layer of the coupling flow.
/// Classification: g^(k−1) ↦ g^(k) through t_k(h_k | h_{k−1}).
/// Generation:     g̃^(k) ↦ g̃^(k−1) through t_k(h_{k−1} | h_k).
CouplingVector layer_map(const RbmStack& stack, int k, const CouplingVector& g_in, Direction direction);

/// Jacobian of layer_map: entry (α, β) = ∂g_out_α / ∂g_in_β.
struct StabilityMatrix {
  int layer = 0;
  Direction direction = Direction::kClassification;
  Eigen::MatrixXd matrix;
  double fd_step = kDefaultFdStep;
  bool approximate = false;
};

/// Central differences, one column per input coupling. Throws NumericalError
/// naming the column when an evaluation is not finite.
StabilityMatrix stability_matrix(const RbmStack& stack, int k, const CouplingVector& g_at,
                                 Direction direction, double fd_step = kDefaultFdStep);

struct LayerSpectrum {
  int layer = 0;
  std::vector<std::complex<double>> eigenvalues;  // sorted by modulus, descending
  std::vector<double> singular_values;            // descending
  double spectral_radius = 0.0;
  Eigen::MatrixXd matrix;
};

LayerSpectrum spectrum_of(const StabilityMatrix& t);

struct RelevanceReport {
  Direction direction = Direction::kClassification;
  double fd_step = kDefaultFdStep;
  double tol_eig = kDefaultTolEig;
  bool approximate = false;
  // Classification: T^(k) at g^(k−1), k = 2..N. Generation: T̃^(k) at g̃^(k),
  // k = N−1..1. Listed in flow order.
  std::vector<LayerSpectrum> layers;
  bool has_relevant = false;  // some |λ| > 1 + tol_eig
  // Generation: T̃^(1)···T̃^(N−1). Classification: T^(N)···T^(2). The empty
  // product is the identity.
  Eigen::MatrixXd cumulative;
  double cumulative_top_singular = 1.0;
  FixedPointVerdict fixed_point;
  // Layer map applied once more at g*, when the flow converged.
  std::optional<LayerSpectrum> fixed_point_spectrum;
};

RelevanceReport relevance_report(const RbmStack& stack, const FlowTrace& flow,
                                 double fd_step = kDefaultFdStep, double tol_eig = kDefaultTolEig,
                                 double fixed_point_tol = kDefaultFixedPointTol,
                                 int fixed_point_window = kDefaultFixedPointWindow);

/// JSON document with eigenvalues as [re, im] pairs.
std::string relevance_report_json(const RelevanceReport& report, const FlowTrace& flow,
                                  const ArtifactMeta* meta = nullptr);

}  // namespace rgshield
