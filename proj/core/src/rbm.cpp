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

#include "rgshield/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rgshield/errors.hpp"

namespace rgshield {

std::string_view to_string(Direction d) {
  return d == Direction::kClassification ? "classification" : "generation";
}

Direction parse_direction(std::string_view text) {
  if (text == "classification" || text == "class" || text == "c") {
    return Direction::kClassification;
  }
  if (text == "generation" || text == "gen" || text == "g") return Direction::kGeneration;
  throw std::invalid_argument("unknown direction '" + std::string(text) + "'");
}

RbmLayer RbmLayer::zeros(int n) {
  return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

void RbmLayer::validate() const {
  const auto n = a.size();
  if (W.rows() != n || W.cols() != n || b.size() != n) {
    throw std::invalid_argument("RBM layer must have square W and matching biases");
  }
  if (!W.allFinite() || !a.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("RBM layer has non-finite parameters");
  }
}

RbmStack::RbmStack(int n, std::vector<RbmLayer> layers, std::uint64_t seed,
                   TrainingProvenance training)
    : n_(n), layers_(std::move(layers)), seed_(seed), training_(std::move(training)) {
  check_state_capacity(n);
  if (layers_.empty()) throw std::invalid_argument("an RBM stack needs at least one layer");
  for (const auto& layer : layers_) {
    layer.validate();
    if (layer.dim() != n) throw std::invalid_argument("all layers must share dimension n");
  }
}

RbmStack RbmStack::zeros(int n, int depth) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  return RbmStack(n, std::vector<RbmLayer>(static_cast<std::size_t>(depth), RbmLayer::zeros(n)));
}

const RbmLayer& RbmStack::layer(int k) const {
  if (k < 1 || k > depth()) throw std::out_of_range("layer index out of range");
  return layers_[static_cast<std::size_t>(k - 1)];
}

void RbmStack::set_layer(int k, RbmLayer layer) {
  if (k < 1 || k > depth()) throw std::out_of_range("layer index out of range");
  layer.validate();
  if (layer.dim() != n_) throw std::invalid_argument("layer dimension mismatch");
  layers_[static_cast<std::size_t>(k - 1)] = std::move(layer);
}

RbmStack RbmStack::scaled(double factor) const {
  auto layers = layers_;
  for (auto& l : layers) {
    l.W *= factor;
    l.a *= factor;
    l.b *= factor;
  }
  return RbmStack(n_, std::move(layers), seed_, training_);
}

namespace {

// energies[s] = Σ_{i ∈ s} field_i, built incrementally over the lowest set bit.
std::vector<double> linear_energies(std::span<const double> field) {
  const std::size_t count = std::size_t{1} << field.size();
  std::vector<double> e(count, 0.0);
  for (std::size_t s = 1; s < count; ++s) {
    const auto low = static_cast<std::size_t>(__builtin_ctzll(s));
    e[s] = e[s & (s - 1)] + field[low];
  }
  return e;
}

}  // namespace

std::vector<double> joint_energies(const RbmLayer& layer) {
  const int n = layer.dim();
  check_state_capacity(2 * n);
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> log_w(states * states);
  Eigen::VectorXd field(n);
  for (std::size_t prev = 0; prev < states; ++prev) {
    const auto h_prev = BinaryState::from_index(static_cast<std::uint32_t>(prev), n);
    double bias = 0.0;
    field = layer.a;
    for (int j = 0; j < n; ++j) {
      if (!h_prev[j]) continue;
      field += layer.W.col(j);
      bias += layer.b(j);
    }
    const auto e = linear_energies(std::span<const double>(field.data(), static_cast<std::size_t>(n)));
    for (std::size_t cur = 0; cur < states; ++cur) log_w[cur + states * prev] = e[cur] + bias;
  }
  return log_w;
}

Distribution joint_distribution(const RbmLayer& layer) {
  return Distribution::from_log_weights(joint_energies(layer));
}

Distribution bernoulli_product(std::span<const double> logits) {
  check_state_capacity(static_cast<int>(logits.size()));
  return Distribution::from_log_weights(linear_energies(logits));
}

Distribution forward_conditional(const RbmLayer& layer, const BinaryState& h_prev) {
  if (h_prev.size() != layer.dim()) throw std::invalid_argument("state dimension mismatch");
  Eigen::VectorXd logits = layer.a;
  for (int j = 0; j < layer.dim(); ++j) {
    if (h_prev[j]) logits += layer.W.col(j);
  }
  return bernoulli_product(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())));
}

Distribution backward_conditional(const RbmLayer& layer, std::span<const double> h_next) {
  if (static_cast<int>(h_next.size()) != layer.dim()) {
    throw std::invalid_argument("state dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> h(h_next.data(), static_cast<Eigen::Index>(h_next.size()));
  Eigen::VectorXd logits = layer.W.transpose() * h + layer.b;
  return bernoulli_product(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())));
}

Distribution backward_conditional(const RbmLayer& layer, const BinaryState& h_next) {
  const auto reals = h_next.as_reals();
  return backward_conditional(layer, std::span<const double>(reals));
}

Distribution backward_conditional(const RbmLayer& layer, const OutputVector& h_next) {
  return backward_conditional(layer, h_next.components());
}

Distribution clamp_distribution(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  check_state_capacity(n);
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> w(states, 1.0);
  for (std::size_t s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) {
      const double p = std::clamp(y[static_cast<std::size_t>(i)], 0.0, 1.0);
      w[s] *= ((s >> i) & 1u) ? p : 1.0 - p;
    }
  }
  return Distribution::from_weights(std::move(w));
}

Eigen::MatrixXd transfer_matrix(const RbmLayer& layer, Direction direction) {
  const int n = layer.dim();
  const auto states = static_cast<Eigen::Index>(std::size_t{1} << n);
  Eigen::MatrixXd t(states, states);
  for (Eigen::Index col = 0; col < states; ++col) {
    const auto given = BinaryState::from_index(static_cast<std::uint32_t>(col), n);
    const auto d = direction == Direction::kClassification ? forward_conditional(layer, given)
                                                           : backward_conditional(layer, given);
    for (Eigen::Index row = 0; row < states; ++row) t(row, col) = d[static_cast<std::size_t>(row)];
  }
  return t;
}

Distribution propagate_step(const Eigen::MatrixXd& transfer, const Distribution& q) {
  if (static_cast<std::size_t>(transfer.cols()) != q.size()) {
    throw std::invalid_argument("transfer matrix does not match distribution size");
  }
  const auto probs = q.probs();
  const Eigen::Map<const Eigen::VectorXd> in(probs.data(), static_cast<Eigen::Index>(probs.size()));
  const Eigen::VectorXd out = transfer * in;
  return Distribution::from_weights(std::vector<double>(out.data(), out.data() + out.size()));
}

ConditionedFlow classify_propagate(const RbmStack& stack, const BinaryState& x) {
  if (x.size() != stack.dim()) throw std::invalid_argument("input dimension mismatch");
  ConditionedFlow flow{Direction::kClassification, x.as_reals(), {}};
  flow.dists.reserve(static_cast<std::size_t>(stack.depth()) + 1);
  flow.dists.push_back(delta_distribution(x));
  // q_0 is a delta, so the first step is the conditional itself.
  flow.dists.push_back(forward_conditional(stack.layer(1), x));
  for (int k = 2; k <= stack.depth(); ++k) {
    const auto t = transfer_matrix(stack.layer(k), Direction::kClassification);
    flow.dists.push_back(propagate_step(t, flow.dists.back()));
  }
  return flow;
}

ConditionedFlow generate_propagate(const RbmStack& stack, std::span<const double> y) {
  if (static_cast<int>(y.size()) != stack.dim()) {
    throw std::invalid_argument("output dimension mismatch");
  }
  const int depth = stack.depth();
  ConditionedFlow flow{Direction::kGeneration, {y.begin(), y.end()}, {}};
  std::vector<Distribution> rev;
  rev.reserve(static_cast<std::size_t>(depth) + 1);
  rev.push_back(clamp_distribution(y));
  rev.push_back(backward_conditional(stack.layer(depth), y));
  for (int k = depth - 1; k >= 1; --k) {
    const auto t = transfer_matrix(stack.layer(k), Direction::kGeneration);
    rev.push_back(propagate_step(t, rev.back()));
  }
  flow.dists.assign(std::make_move_iterator(rev.rbegin()), std::make_move_iterator(rev.rend()));
  return flow;
}

ConditionedFlow generate_propagate(const RbmStack& stack, const OutputVector& y) {
  return generate_propagate(stack, y.components());
}

Distribution generated_distribution(const RbmStack& stack, std::span<const double> y) {
  if (static_cast<int>(y.size()) != stack.dim()) {
    throw std::invalid_argument("output dimension mismatch");
  }
  auto q = backward_conditional(stack.layer(stack.depth()), y);
  for (int k = stack.depth() - 1; k >= 1; --k) {
    q = propagate_step(transfer_matrix(stack.layer(k), Direction::kGeneration), q);
  }
  return q;
}

Distribution classified_distribution(const RbmStack& stack, const BinaryState& x) {
  if (x.size() != stack.dim()) throw std::invalid_argument("input dimension mismatch");
  auto q = forward_conditional(stack.layer(1), x);
  for (int k = 2; k <= stack.depth(); ++k) {
    q = propagate_step(transfer_matrix(stack.layer(k), Direction::kClassification), q);
  }
  return q;
}

}  // namespace rgshield
