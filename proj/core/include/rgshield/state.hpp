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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rgshield {

// Exact enumeration stores 2^bits probabilities; beyond this it stops being
// exact-at-desk-scale.
inline constexpr int kMaxStateBits = 16;

// Throws CapacityError if a state space of `bits` bits cannot be enumerated.
void check_state_capacity(int bits);

/// Vector of {0,1} node values.
///
/// States map to indices little-endian: component i is bit i of the index.
/// Every module shares this encoding, so a Distribution over n bits is
/// indexed by `BinaryState::index()`.
class BinaryState {
 public:
  BinaryState() = default;
  explicit BinaryState(std::vector<std::uint8_t> bits);

  static BinaryState from_index(std::uint32_t index, int n);
  // Accepts "0110" or "0,1,1,0".
  static BinaryState parse(std::string_view text);

  int size() const { return static_cast<int>(bits_.size()); }
  std::uint32_t index() const;
  std::uint8_t operator[](int i) const { return bits_[static_cast<std::size_t>(i)]; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::vector<double> as_reals() const;
  std::string to_string() const;

  friend bool operator==(const BinaryState&, const BinaryState&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Returns all 2^n states in ascending index order.
std::vector<BinaryState> enumerate_states(int n);

/// Dense normalized probability vector over 2^bits binary states.
///
/// `log_norm()` keeps the log of the normalizer divided out at construction,
/// so partition functions are recoverable when the weights were Boltzmann
/// factors.
class Distribution {
 public:
  // Nonnegative weights with a positive finite sum.
  static Distribution from_weights(std::vector<double> weights);
  // Unnormalized log-weights; normalized with max-subtraction.
  static Distribution from_log_weights(std::span<const double> log_weights);

  int bits() const { return bits_; }
  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  double log_norm() const { return log_norm_; }
  double min_prob() const;
  double max_abs_diff(const Distribution& other) const;

 private:
  Distribution(int bits, std::vector<double> probs, double log_norm);

  int bits_ = 0;
  std::vector<double> probs_;
  double log_norm_ = 0.0;
};

/// Σ p1 log(p1/p2) in nats, with 0·log(0/q) = 0.
double kl_divergence(const Distribution& p1, const Distribution& p2);

Distribution delta_distribution(const BinaryState& s);

/// Most probable state; ties go to the lowest index.
BinaryState argmax_state(const Distribution& d);

/// Soft label with components in [0,1]. Clean labels are exactly binary.
class OutputVector {
 public:
  OutputVector() = default;
  explicit OutputVector(std::vector<double> components);
  static OutputVector from_state(const BinaryState& s);

  int size() const { return static_cast<int>(components_.size()); }
  std::span<const double> components() const { return components_; }
  double operator[](int i) const { return components_[static_cast<std::size_t>(i)]; }
  bool is_binary() const;
  // Componentwise rounding (0.5 rounds up).
  BinaryState rounded() const;

  friend bool operator==(const OutputVector&, const OutputVector&) = default;

 private:
  std::vector<double> components_;
};

struct LabeledExample {
  BinaryState x;
  OutputVector y;
  double weight = 0.0;
};

/// Weighted (x, y) pairs defining p(x, y).
class Dataset {
 public:
  Dataset() = default;
  Dataset(int n, std::vector<LabeledExample> pairs, double weight_tol = 1e-12);

  int dim() const { return n_; }
  std::span<const LabeledExample> pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

 private:
  int n_ = 0;
  std::vector<LabeledExample> pairs_;
};

}  // namespace rgshield
