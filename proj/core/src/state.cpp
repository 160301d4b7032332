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

#include "rgshield/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rgshield/errors.hpp"

namespace rgshield {

void check_state_capacity(int bits) {
  if (bits < 0) throw std::invalid_argument("negative state dimension");
  if (bits > kMaxStateBits) {
    throw CapacityError("state space of " + std::to_string(bits) +
                        " bits exceeds the enumeration cap of " +
                        std::to_string(kMaxStateBits) + " bits");
  }
}

BinaryState::BinaryState(std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw std::invalid_argument("binary state component not in {0,1}");
  }
}

BinaryState BinaryState::from_index(std::uint32_t index, int n) {
  check_state_capacity(n);
  if (n < 32 && (index >> n) != 0) {
    throw std::invalid_argument("state index out of range");
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = (index >> i) & 1u;
  return BinaryState(std::move(bits));
}

BinaryState BinaryState::parse(std::string_view text) {
  std::vector<std::uint8_t> bits;
  for (char c : text) {
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ',' && c != ' ') {
      throw std::invalid_argument("cannot parse binary state '" +
                                  std::string(text) + "'");
    }
  }
  return BinaryState(std::move(bits));
}

std::uint32_t BinaryState::index() const {
  std::uint32_t idx = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) idx |= std::uint32_t{bits_[i]} << i;
  return idx;
}

std::vector<double> BinaryState::as_reals() const {
  return {bits_.begin(), bits_.end()};
}

std::string BinaryState::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
  return s;
}

std::vector<BinaryState> enumerate_states(int n) {
  check_state_capacity(n);
  const std::uint32_t count = 1u << n;
  std::vector<BinaryState> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(BinaryState::from_index(i, n));
  return out;
}

namespace {

int bits_for_size(std::size_t size) {
  if (size == 0 || (size & (size - 1)) != 0) {
    throw std::invalid_argument("distribution size must be a power of two");
  }
  int bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;
  check_state_capacity(bits);
  return bits;
}

}  // namespace

Distribution::Distribution(int bits, std::vector<double> probs, double log_norm)
    : bits_(bits), probs_(std::move(probs)), log_norm_(log_norm) {}

Distribution Distribution::from_weights(std::vector<double> weights) {
  const int bits = bits_for_size(weights.size());
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("distribution weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw PositivityError("distribution weights sum to zero");
  for (double& w : weights) w /= total;
  return Distribution(bits, std::move(weights), std::log(total));
}

Distribution Distribution::from_log_weights(std::span<const double> log_weights) {
  const int bits = bits_for_size(log_weights.size());
  double top = -std::numeric_limits<double>::infinity();
  for (double l : log_weights) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw NumericalError("log-weight is NaN or +inf");
    }
    top = std::max(top, l);
  }
  if (!std::isfinite(top)) throw PositivityError("all log-weights are -inf");
  std::vector<double> probs(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(log_weights[i] - top);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return Distribution(bits, std::move(probs), top + std::log(total));
}

double Distribution::min_prob() const {
  return *std::min_element(probs_.begin(), probs_.end());
}

double Distribution::max_abs_diff(const Distribution& other) const {
  if (other.size() != size()) throw std::invalid_argument("distribution sizes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    worst = std::max(worst, std::abs(probs_[i] - other.probs_[i]));
  }
  return worst;
}

double kl_divergence(const Distribution& p1, const Distribution& p2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("KL of distributions with different sizes");
  double total = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double p = p1[i];
    if (p == 0.0) continue;
    const double q = p2[i];
    if (q == 0.0) {
      throw DivergenceInfiniteError("p1 has mass at state " + std::to_string(i) +
                                    " where p2 is zero");
    }
    total += p * std::log(p / q);
  }
  return std::max(total, 0.0);
}

Distribution delta_distribution(const BinaryState& s) {
  check_state_capacity(s.size());
  std::vector<double> probs(std::size_t{1} << s.size(), 0.0);
  probs[s.index()] = 1.0;
  return Distribution::from_weights(std::move(probs));
}

BinaryState argmax_state(const Distribution& d) {
  const auto probs = d.probs();
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto it = std::max_element(probs.begin(), probs.end());
  return BinaryState::from_index(static_cast<std::uint32_t>(it - probs.begin()), d.bits());
}

OutputVector::OutputVector(std::vector<double> components)
    : components_(std::move(components)) {
  for (double c : components_) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("output component outside [0,1]");
    }
  }
}

OutputVector OutputVector::from_state(const BinaryState& s) {
  return OutputVector(s.as_reals());
}

bool OutputVector::is_binary() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](double c) { return c == 0.0 || c == 1.0; });
}

BinaryState OutputVector::rounded() const {
  std::vector<std::uint8_t> bits(components_.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = components_[i] >= 0.5 ? 1 : 0;
  return BinaryState(std::move(bits));
}

Dataset::Dataset(int n, std::vector<LabeledExample> pairs, double weight_tol)
    : n_(n), pairs_(std::move(pairs)) {
  check_state_capacity(n);
  double total = 0.0;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (p.x.size() != n || p.y.size() != n) {
      throw std::invalid_argument("dataset record " + std::to_string(i) +
                                  " has dimension other than " + std::to_string(n));
    }
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) {
      throw std::invalid_argument("dataset record " + std::to_string(i) +
                                  " has a negative or non-finite weight");
    }
    total += p.weight;
  }
  if (!pairs_.empty() && std::abs(total - 1.0) > weight_tol) {
    throw std::invalid_argument("dataset weights sum to " + std::to_string(total) +
                                ", not 1");
  }
}

}  // namespace rgshield
