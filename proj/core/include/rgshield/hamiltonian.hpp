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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rgshield/rbm.hpp"
#include "rgshield/state.hpp"

namespace rgshield {

/// Monomials O_S(h) = Π_{i∈S} h_i over {0,1} bits, one per nonempty subset S.
///
/// Subsets are stored as bitmasks and ordered by (|S|, lexicographic order of
/// the sorted members). The empty subset is never present: the additive
/// constant lives in the distribution's normalizer.
class OperatorBasis {
 public:
  static OperatorBasis complete(int n);
  // All nonempty subsets with at most `order` members.
  static OperatorBasis up_to_order(int n, int order);
  // Throws std::invalid_argument on empty, duplicate or out-of-range subsets.
  static OperatorBasis from_subsets(int n, std::vector<std::uint32_t> masks);
  // "complete", "order:K", or explicit subsets "0;1;0,1".
  static OperatorBasis parse(std::string_view text, int n);

  int dim() const { return n_; }
  std::size_t size() const { return masks_.size(); }
  std::span<const std::uint32_t> masks() const { return masks_; }
  bool is_complete() const { return complete_; }
  // "g{0,2}"
  std::string name(std::size_t alpha) const;
  // Position of a subset, or nullopt.
  std::optional<std::size_t> find(std::uint32_t mask) const;

  friend bool operator==(const OperatorBasis& a, const OperatorBasis& b) {
    return a.n_ == b.n_ && a.masks_ == b.masks_;
  }

 private:
  OperatorBasis(int n, std::vector<std::uint32_t> masks);

  int n_ = 0;
  std::vector<std::uint32_t> masks_;
  bool complete_ = false;
};

using BasisPtr = std::shared_ptr<const OperatorBasis>;

BasisPtr make_basis(OperatorBasis basis);

/// Effective-Hamiltonian coefficients: q(h) ∝ exp(−Σ_S g_S O_S(h)).
class CouplingVector {
 public:
  CouplingVector(BasisPtr basis, std::vector<double> values, bool approximate = false);

  const OperatorBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t alpha) const { return values_[alpha]; }
  // True when extracted by least squares over a truncated basis.
  bool approximate() const { return approximate_; }
  double max_abs_diff(const CouplingVector& other) const;

 private:
  BasisPtr basis_;
  std::vector<double> values_;
  bool approximate_ = false;
};

/// Complete basis: exact Möbius inversion of E = −log q over the subset
/// lattice. Truncated basis: least-squares fit of E against [1, O_S], marked
/// approximate. Throws PositivityError on a zero probability.
CouplingVector extract_couplings(const Distribution& dist, const BasisPtr& basis);

/// q(h) = exp(−H(h)) / Z with H(h) = Σ_{S⊆h} g_S; log Z is the log_norm.
Distribution reconstruct_distribution(const CouplingVector& g);

/// Couplings of every interior distribution along a conditioned flow.
/// Classification records layers 1..N; generation records N−1..0.
struct FlowTrace {
  Direction direction = Direction::kClassification;
  std::vector<double> conditioning;
  std::vector<int> layers;
  std::vector<CouplingVector> couplings;
  // deltas[i] = max |couplings[i+1] − couplings[i]|.
  std::vector<double> deltas;
  bool approximate = false;
};

FlowTrace flow_trace(const RbmStack& stack, std::span<const double> conditioning,
                     Direction direction, const BasisPtr& basis);

struct FixedPointVerdict {
  bool converged = false;
  double tail_delta = 0.0;  // max delta over the window
  std::optional<CouplingVector> fixed_couplings;
};

inline constexpr double kDefaultFixedPointTol = 1e-3;
inline constexpr int kDefaultFixedPointWindow = 2;

/// Converged iff max delta over the last `window` steps < tol. Throws
/// std::invalid_argument unless 1 ≤ window ≤ deltas.size().
FixedPointVerdict detect_fixed_point(const FlowTrace& trace, double tol = kDefaultFixedPointTol,
                                     int window = kDefaultFixedPointWindow);

/// Columns: layer_index, one per basis subset, delta (blank on the first row).
std::string flow_trace_csv(const FlowTrace& trace, const std::string& meta_line = "");

}  // namespace rgshield
