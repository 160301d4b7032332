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

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "rgshield/errors.hpp"
#include "rgshield/model_io.hpp"
#include "rgshield/rbm.hpp"
#include "support/oracles.hpp"

namespace rgshield {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

RbmLayer scalar_layer(double w, double a, double b) {
  RbmLayer l = RbmLayer::zeros(1);
  l.W(0, 0) = w;
  l.a(0) = a;
  l.b(0) = b;
  return l;
}

TEST(JointDistribution, ZeroLayerIsUniform) {
  const auto d = joint_distribution(RbmLayer::zeros(1));
  for (double p : d.probs()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(JointDistribution, VisibleBiasExample) {
  const auto d = joint_distribution(scalar_layer(0.0, 0.0, std::log(3.0)));
  EXPECT_NEAR(d[0], 0.125, 1e-15);
  EXPECT_NEAR(d[1], 0.125, 1e-15);
  EXPECT_NEAR(d[2], 0.375, 1e-15);
  EXPECT_NEAR(d[3], 0.375, 1e-15);
  EXPECT_NEAR(d.log_norm(), std::log(8.0), 1e-14);
}

TEST(JointDistribution, MatchesEnumeration) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeededRng rng(seed);
    const auto layer = oracle::random_layer(rng, 2, 1.5);
    const auto d = joint_distribution(layer);
    const auto ref = oracle::joint(layer);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(d[i], ref[i], 1e-14);
  }
}

TEST(JointDistribution, SwappingRolesTransposes) {
  SeededRng rng(11);
  const auto l = oracle::random_layer(rng, 2, 1.0);
  RbmLayer swapped = RbmLayer::zeros(2);
  swapped.W = l.W.transpose();
  swapped.a = l.b;
  swapped.b = l.a;
  const auto d = joint_distribution(l);
  const auto e = joint_distribution(swapped);
  for (std::uint32_t h = 0; h < 4; ++h) {
    for (std::uint32_t hp = 0; hp < 4; ++hp) EXPECT_NEAR(d[h + 4 * hp], e[hp + 4 * h], 1e-15);
  }
}

TEST(ForwardConditional, Examples) {
  const auto uniform = forward_conditional(RbmLayer::zeros(2), BinaryState({1, 0}));
  for (double p : uniform.probs()) EXPECT_DOUBLE_EQ(p, 0.25);
  const auto d = forward_conditional(scalar_layer(2.0, -1.0, 0.0), BinaryState({1}));
  EXPECT_NEAR(d[1], logistic(1.0), 1e-15);
  EXPECT_NEAR(d[1], 0.731059, 1e-6);
}

TEST(ForwardConditional, MatchesBayesOnJoint) {
  SeededRng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto layer = oracle::random_layer(rng, 3, 2.0);
    const auto table = oracle::forward_table(layer);
    for (std::uint32_t hp = 0; hp < 8; ++hp) {
      const auto d = forward_conditional(layer, BinaryState::from_index(hp, 3));
      double sum = 0.0;
      for (std::uint32_t h = 0; h < 8; ++h) {
        EXPECT_NEAR(d[h], table[hp][h], 1e-14);
        EXPECT_GT(d[h], 0.0);
        sum += d[h];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(BackwardConditional, Examples) {
  const auto uniform = backward_conditional(RbmLayer::zeros(1), BinaryState({1}));
  EXPECT_DOUBLE_EQ(uniform[0], 0.5);
  const auto layer = scalar_layer(2.0, 0.0, 0.0);
  EXPECT_NEAR(backward_conditional(layer, BinaryState({1}))[1], 0.880797, 1e-6);
  const std::vector<double> half{0.5};
  EXPECT_NEAR(backward_conditional(layer, half)[1], logistic(1.0), 1e-15);
}

TEST(BackwardConditional, BinaryAndRealAgree) {
  SeededRng rng(8);
  const auto layer = oracle::random_layer(rng, 3, 2.0);
  const auto table = oracle::backward_table(layer);
  for (std::uint32_t h = 0; h < 8; ++h) {
    const auto s = BinaryState::from_index(h, 3);
    const auto a = backward_conditional(layer, s);
    const auto b = backward_conditional(layer, s.as_reals());
    for (std::uint32_t hp = 0; hp < 8; ++hp) {
      EXPECT_NEAR(a[hp], table[h][hp], 1e-14);
      EXPECT_EQ(a[hp], b[hp]);
    }
  }
}

TEST(BackwardConditional, HiddenBiasCancels) {
  SeededRng rng(9);
  auto layer = oracle::random_layer(rng, 2, 1.0);
  const std::vector<double> y{0.3, 0.9};
  const auto before = backward_conditional(layer, y);
  layer.a.setConstant(5.0);
  EXPECT_LT(before.max_abs_diff(backward_conditional(layer, y)), 1e-15);
}

TEST(Conditionals, LargeWeightsStayFinite) {
  const auto layer = scalar_layer(800.0, -400.0, 300.0);
  const auto f = forward_conditional(layer, BinaryState({1}));
  EXPECT_TRUE(std::isfinite(f[0]) && std::isfinite(f[1]));
  EXPECT_NEAR(f[1], 1.0, 1e-12);
  const auto j = joint_distribution(layer);
  EXPECT_TRUE(std::isfinite(j.log_norm()));
}

TEST(ClassifyPropagate, SingleLayerReduces) {
  const auto stack = oracle::random_stack(4, 2, 1);
  const BinaryState x({0, 1});
  const auto flow = classify_propagate(stack, x);
  ASSERT_EQ(flow.dists.size(), 2u);
  EXPECT_EQ(flow.dists[0].max_abs_diff(delta_distribution(x)), 0.0);
  EXPECT_LT(flow.dists[1].max_abs_diff(forward_conditional(stack.layer(1), x)), 1e-15);
}

TEST(ClassifyPropagate, ZeroStackIsUniform) {
  const auto flow = classify_propagate(RbmStack::zeros(2, 3), BinaryState({1, 1}));
  for (double p : flow.dists.back().probs()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(ClassifyPropagate, MatchesPathSum) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (int depth = 1; depth <= 3; ++depth) {
      const auto stack = oracle::random_stack(seed, 2, depth);
      for (std::uint32_t x = 0; x < 4; ++x) {
        const auto flow = classify_propagate(stack, BinaryState::from_index(x, 2));
        const auto ref = oracle::classify(stack, x);
        for (int k = 0; k <= depth; ++k) {
          double sum = 0.0;
          for (std::uint32_t h = 0; h < 4; ++h) {
            EXPECT_NEAR(flow.dists[static_cast<std::size_t>(k)][h], ref[static_cast<std::size_t>(k)][h], 1e-12);
            sum += flow.dists[static_cast<std::size_t>(k)][h];
            if (k > 0) {
              EXPECT_GT(flow.dists[static_cast<std::size_t>(k)][h], 0.0);
            }
          }
          EXPECT_NEAR(sum, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(GeneratePropagate, SingleLayerReduces) {
  const auto stack = oracle::random_stack(5, 2, 1);
  const std::vector<double> y{0.2, 1.0};
  const auto flow = generate_propagate(stack, y);
  EXPECT_LT(flow.dists[0].max_abs_diff(backward_conditional(stack.layer(1), y)), 1e-15);
  EXPECT_LT(generated_distribution(stack, y).max_abs_diff(flow.dists[0]), 1e-15);
}

TEST(GeneratePropagate, ZeroStackIsUniform) {
  const std::vector<double> y{0.0, 1.0, 0.4};
  const auto q = generated_distribution(RbmStack::zeros(3, 2), y);
  for (double p : q.probs()) EXPECT_DOUBLE_EQ(p, 0.125);
}

TEST(GeneratePropagate, MatchesPathSumForSoftLabels) {
  SeededRng rng(77);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto stack = oracle::random_stack(seed, 2, 3);
    for (int trial = 0; trial < 4; ++trial) {
      const std::vector<double> y{rng.uniform01(), rng.uniform01()};
      const auto flow = generate_propagate(stack, y);
      const auto ref = oracle::generate(stack, y);
      for (int k = 0; k < 3; ++k) {
        for (std::uint32_t h = 0; h < 4; ++h) {
          EXPECT_NEAR(flow.dists[static_cast<std::size_t>(k)][h], ref[static_cast<std::size_t>(k)][h], 1e-12);
        }
      }
      EXPECT_LT(flow.dists[3].max_abs_diff(clamp_distribution(y)), 1e-15);
    }
  }
}

TEST(GeneratePropagate, BinaryLabelBoundaryIsDelta) {
  const auto stack = oracle::random_stack(6, 2, 2);
  const OutputVector y({1.0, 0.0});
  const auto flow = generate_propagate(stack, y);
  EXPECT_EQ(flow.dists[2].max_abs_diff(delta_distribution(BinaryState({1, 0}))), 0.0);
  const auto via_span = generate_propagate(stack, y.components());
  EXPECT_EQ(flow.dists[0].max_abs_diff(via_span.dists[0]), 0.0);
}

TEST(ClampDistribution, ProductOfBernoullis) {
  const std::vector<double> y{0.25, 1.0};
  const auto d = clamp_distribution(y);
  EXPECT_NEAR(d[0], 0.0, 1e-15);
  EXPECT_NEAR(d[2], 0.75, 1e-15);
  EXPECT_NEAR(d[3], 0.25, 1e-15);
}

TEST(RbmStack, ScaledMultipliesEverything) {
  const auto stack = oracle::random_stack(2, 2, 2);
  const auto big = stack.scaled(3.0);
  for (int k = 1; k <= 2; ++k) {
    EXPECT_TRUE(big.layer(k).W.isApprox(3.0 * stack.layer(k).W));
    EXPECT_TRUE(big.layer(k).a.isApprox(3.0 * stack.layer(k).a));
    EXPECT_TRUE(big.layer(k).b.isApprox(3.0 * stack.layer(k).b));
  }
}

TEST(RbmStack, RejectsBadShapes) {
  EXPECT_THROW(RbmStack(2, {}), std::invalid_argument);
  EXPECT_THROW(RbmStack(2, {RbmLayer::zeros(3)}), std::invalid_argument);
  RbmLayer bad = RbmLayer::zeros(1);
  bad.W(0, 0) = std::nan("");
  EXPECT_THROW(RbmStack(1, {bad}), std::invalid_argument);
}

TEST(ParseDirection, Aliases) {
  EXPECT_EQ(parse_direction("gen"), Direction::kGeneration);
  EXPECT_EQ(parse_direction("classification"), Direction::kClassification);
  EXPECT_THROW(parse_direction("sideways"), std::invalid_argument);
}

TEST(ModelIo, RoundTripIsBitExact) {
  auto stack = oracle::random_stack(42, 3, 3);
  stack.set_training({0.125, 17, "abcdef0123456789"});
  const ArtifactMeta meta{"0123456789abcdef", "0.1.0"};
  const std::string text = save_model(stack, &meta);
  ArtifactMeta read;
  const auto back = load_model(text, &read);
  EXPECT_EQ(read.config_hash, meta.config_hash);
  EXPECT_EQ(back.seed(), 42u);
  EXPECT_EQ(back.training().sweeps, 17);
  EXPECT_EQ(back.training().config_hash, "abcdef0123456789");
  for (int k = 1; k <= 3; ++k) {
    EXPECT_EQ(back.layer(k).W, stack.layer(k).W);
    EXPECT_EQ(back.layer(k).a, stack.layer(k).a);
    EXPECT_EQ(back.layer(k).b, stack.layer(k).b);
  }
  EXPECT_EQ(save_model(back, &meta), text);
}

TEST(ModelIo, TruncatedFileIsSchemaError) {
  const std::string text = save_model(oracle::random_stack(1, 2, 2));
  EXPECT_THROW(load_model(text.substr(0, text.size() / 2)), SchemaError);
}

TEST(ModelIo, VersionMismatch) {
  std::string text = save_model(oracle::random_stack(1, 1, 1));
  const auto pos = text.find("\"format_version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 19, "\"format_version\": 9");
  EXPECT_THROW(load_model(text), VersionError);
}

TEST(ModelIo, ErrorNamesFieldPath) {
  std::string text = save_model(oracle::random_stack(1, 2, 2));
  const auto pos = text.find("\"W\": [");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 6, "\"W\": [\"x\", ");
  try {
    load_model(text);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(e.path().find("layers[0].W"), std::string::npos) << e.path();
  }
}

}  // namespace
}  // namespace rgshield
