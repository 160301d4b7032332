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

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "rgshield/fim.hpp"
#include "rgshield/hamiltonian.hpp"
#include "rgshield/random.hpp"
#include "rgshield/rbm.hpp"
#include "rgshield/stability.hpp"

namespace {

using namespace rgshield;

RbmStack random_stack(int n, int depth, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<RbmLayer> layers;
  for (int k = 0; k < depth; ++k) {
    RbmLayer l = RbmLayer::zeros(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) l.W(i, j) = rng.uniform(-1.5, 1.5);
      l.a(i) = rng.uniform(-1.5, 1.5);
      l.b(i) = rng.uniform(-1.5, 1.5);
    }
    layers.push_back(std::move(l));
  }
  return RbmStack(n, std::move(layers), seed);
}

std::vector<double> corner(int n) {
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  y[0] = 1.0;
  return y;
}

void BM_GeneratePropagate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto stack = random_stack(n, 4, 1);
  const auto y = corner(n);
  for (auto _ : state) benchmark::DoNotOptimize(generate_propagate(stack, y));
}
BENCHMARK(BM_GeneratePropagate)->DenseRange(2, 8, 2);

void BM_ClassifyPropagate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto stack = random_stack(n, 4, 2);
  const auto x = BinaryState::from_index(1, n);
  for (auto _ : state) benchmark::DoNotOptimize(classify_propagate(stack, x));
}
BENCHMARK(BM_ClassifyPropagate)->DenseRange(2, 8, 2);

void BM_ExtractCouplings(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto basis = make_basis(OperatorBasis::complete(n));
  const auto dist = generate_propagate(random_stack(n, 1, 3), corner(n)).dists[0];
  for (auto _ : state) benchmark::DoNotOptimize(extract_couplings(dist, basis));
}
BENCHMARK(BM_ExtractCouplings)->DenseRange(2, 10, 2);

void BM_TruncatedExtraction(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto basis = make_basis(OperatorBasis::up_to_order(n, 2));
  const auto dist = generate_propagate(random_stack(n, 1, 4), corner(n)).dists[0];
  for (auto _ : state) benchmark::DoNotOptimize(extract_couplings(dist, basis));
}
BENCHMARK(BM_TruncatedExtraction)->DenseRange(2, 8, 2);

void BM_RelevanceReport(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto stack = random_stack(n, 4, 5);
  const auto basis = make_basis(OperatorBasis::complete(n));
  const auto flow = flow_trace(stack, corner(n), Direction::kGeneration, basis);
  for (auto _ : state) benchmark::DoNotOptimize(relevance_report(stack, flow));
}
BENCHMARK(BM_RelevanceReport)->DenseRange(2, 5, 1);

void BM_Fim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto method = state.range(1) == 0 ? FimMethod::kChainRule : FimMethod::kScoreOracle;
  const auto stack = random_stack(n, 3, 6);
  const auto y = corner(n);
  for (auto _ : state) benchmark::DoNotOptimize(fim(stack, y, method));
}
BENCHMARK(BM_Fim)->ArgsProduct({{2, 3, 4, 5}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();
