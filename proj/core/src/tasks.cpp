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

#include "rgshield/tasks.hpp"

#include <bit>
#include <stdexcept>
#include <string>

#include "rgshield/random.hpp"
#include "rgshield/rbm.hpp"

namespace rgshield {

namespace {

// Weight half-width for teacher stacks; large enough that labels are not
// dominated by the biases.
constexpr double kTeacherScale = 2.0;

RbmStack teacher_stack(int n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<RbmLayer> layers;
  for (int k = 0; k < 2; ++k) {
    RbmLayer layer = RbmLayer::zeros(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) layer.W(i, j) = rng.uniform(-kTeacherScale, kTeacherScale);
    }
    for (int i = 0; i < n; ++i) layer.a(i) = rng.uniform(-kTeacherScale, kTeacherScale);
    for (int j = 0; j < n; ++j) layer.b(j) = rng.uniform(-kTeacherScale, kTeacherScale);
    layers.push_back(std::move(layer));
  }
  return RbmStack(n, std::move(layers), seed);
}

}  // namespace

Dataset make_task(std::string_view name, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("task dimension must be >= 1");
  check_state_capacity(n);
  const auto xs = enumerate_states(n);
  const double w = 1.0 / static_cast<double>(xs.size());
  std::vector<LabeledExample> pairs;
  pairs.reserve(xs.size());
  if (name == "copy") {
    for (const auto& x : xs) pairs.push_back({x, OutputVector::from_state(x), w});
  } else if (name == "parity") {
    for (const auto& x : xs) {
      std::vector<double> y(static_cast<std::size_t>(n), 0.0);
      y[0] = static_cast<double>(std::popcount(x.index()) & 1);
      pairs.push_back({x, OutputVector(std::move(y)), w});
    }
  } else if (name == "teacher") {
    const RbmStack teacher = teacher_stack(n, seed);
    for (const auto& x : xs) {
      pairs.push_back({x, OutputVector::from_state(argmax_state(classified_distribution(teacher, x))), w});
    }
  } else {
    throw std::invalid_argument("unknown task '" + std::string(name) + "' (expected copy, parity or teacher)");
  }
  return Dataset(n, std::move(pairs));
}

}  // namespace rgshield
