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

#include <gtest/gtest.h>

#include "rgshield/errors.hpp"
#include "rgshield/fim.hpp"
#include "support/oracles.hpp"

namespace rgshield {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(a.norm(), b.norm());
}

std::vector<double> random_output(SeededRng& rng, int n) {
  std::vector<double> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = rng.uniform01() < 0.5 ? 0.0 : 1.0;
  return y;
}

FimResult fim_of(const Eigen::MatrixXd& m) { return decompose_fim({0.0, 0.0}, m, FimMethod::kChainRule); }

TEST(LastLayerCouplings, ZeroFieldGivesZero) {
  auto stack = oracle::random_stack(1, 2, 2);
  auto last = stack.layer(2);
  last.b.setZero();
  stack.set_layer(2, last);
  const auto basis = make_basis(OperatorBasis::complete(2));
  const std::vector<double> y{0.0, 0.0};
  const auto last_couplings = last_layer_couplings(stack, y, basis);
  for (double v : last_couplings.couplings.values()) EXPECT_EQ(v, 0.0);
}

TEST(LastLayerCouplings, JacobianIsMinusWTransposed) {
  const auto stack = oracle::random_stack(2, 3, 2);
  const auto basis = make_basis(OperatorBasis::complete(3));
  const std::vector<double> y{1.0, 0.0, 1.0};
  const auto ll = last_layer_couplings(stack, y, basis);
  const auto& w = stack.layer(2).W;
  for (std::size_t a = 0; a < basis->size(); ++a) {
    const auto mask = basis->masks()[a];
    for (int i = 0; i < 3; ++i) {
      const double expected = std::popcount(mask) == 1 ? -w(i, std::countr_zero(mask)) : 0.0;
      EXPECT_EQ(ll.jacobian(static_cast<Eigen::Index>(a), i), expected);
    }
  }
}

TEST(LastLayerCouplings, MatchesExtraction) {
  SeededRng rng(3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto stack = oracle::random_stack(seed, 3, 2);
    const auto basis = make_basis(OperatorBasis::complete(3));
    const std::vector<double> y{rng.uniform01(), rng.uniform01(), rng.uniform01()};
    const auto closed = last_layer_couplings(stack, y, basis).couplings;
    const auto extracted = extract_couplings(backward_conditional(stack.layer(2), y), basis);
    EXPECT_LT(closed.max_abs_diff(extracted), 1e-10);
  }
}

TEST(CouplingJacobian, SingleLayerIsLastLayerJacobian) {
  const auto stack = oracle::random_stack(4, 2, 1);
  const auto basis = make_basis(OperatorBasis::complete(2));
  const std::vector<double> y{1.0, 0.0};
  EXPECT_EQ(coupling_jacobian(stack, y, basis), last_layer_couplings(stack, y, basis).jacobian);
}

TEST(CouplingJacobian, ZeroStackAnnihilates) {
  const auto basis = make_basis(OperatorBasis::complete(2));
  const std::vector<double> y{1.0, 1.0};
  EXPECT_EQ(coupling_jacobian(RbmStack::zeros(2, 3), y, basis).cwiseAbs().maxCoeff(), 0.0);
}

TEST(CouplingJacobian, MatchesDirectDifferencesInOutput) {
  const auto basis = make_basis(OperatorBasis::complete(2));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto stack = oracle::random_stack(seed, 2, 3);
    const std::vector<double> y{1.0, 0.0};
    const auto j = coupling_jacobian(stack, y, basis);
    Eigen::MatrixXd direct(3, 2);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
      auto up = y;
      auto down = y;
      up[static_cast<std::size_t>(i)] += h;
      down[static_cast<std::size_t>(i)] -= h;
      const auto gu = extract_couplings(generated_distribution(stack, up), basis);
      const auto gd = extract_couplings(generated_distribution(stack, down), basis);
      for (int a = 0; a < 3; ++a) direct(a, i) = (gu[static_cast<std::size_t>(a)] - gd[static_cast<std::size_t>(a)]) / (2 * h);
    }
    EXPECT_LE(rel_frobenius(j, direct), 1e-3) << "seed " << seed;
  }
}

TEST(OperatorCovariance, Examples) {
  const auto basis = OperatorBasis::complete(2);
  const auto point = delta_distribution(BinaryState({1, 0}));
  EXPECT_EQ(operator_covariance(point, basis).cwiseAbs().maxCoeff(), 0.0);
  const auto c = operator_covariance(Distribution::from_weights({1.0, 1.0}), OperatorBasis::complete(1));
  EXPECT_DOUBLE_EQ(c(0, 0), 0.25);
  SeededRng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cov = operator_covariance(oracle::random_distribution(rng, 3), OperatorBasis::complete(3));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff(), -1e-12);
    EXPECT_EQ(cov, cov.transpose());
  }
}

TEST(Fim, ZeroStackIsZero) {
  const std::vector<double> y{1.0, 0.0};
  for (auto method : {FimMethod::kChainRule, FimMethod::kScoreOracle}) {
    const auto f = fim(RbmStack::zeros(2, 2), y, method);
    EXPECT_LT(f.matrix.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Fim, SingleLayerClosedForm) {
  SeededRng rng(19);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto stack = oracle::random_stack(seed, 3, 1);
    const auto& l = stack.layer(1);
    const auto y = random_output(rng, 3);
    const Eigen::Map<const Eigen::Vector3d> yv(y.data());
    const Eigen::VectorXd field = l.W.transpose() * yv + l.b;
    Eigen::VectorXd d(3);
    for (int j = 0; j < 3; ++j) d(j) = logistic(field(j)) * (1.0 - logistic(field(j)));
    const Eigen::MatrixXd expected = l.W * d.asDiagonal() * l.W.transpose();
    for (auto method : {FimMethod::kChainRule, FimMethod::kScoreOracle}) {
      EXPECT_LT((fim(stack, y, method).matrix - expected).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Fim, MethodsAgreeAndArePsd) {
  SeededRng rng(29);
  for (int depth = 2; depth <= 4; ++depth) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto stack = oracle::random_stack(seed * 10 + static_cast<std::uint64_t>(depth), 3, depth);
      const auto y = random_output(rng, 3);
      const auto chain = fim(stack, y, FimMethod::kChainRule);
      const auto score = fim(stack, y, FimMethod::kScoreOracle);
      EXPECT_LE(rel_frobenius(chain.matrix, score.matrix), 1e-3);
      for (const auto* f : {&chain, &score}) {
        EXPECT_EQ(f->matrix, f->matrix.transpose());
        EXPECT_GE(f->eigenvalues.minCoeff(), -1e-9);
        for (Eigen::Index i = 1; i < f->eigenvalues.size(); ++i) EXPECT_GE(f->eigenvalues(i - 1), f->eigenvalues(i));
        EXPECT_LT((f->eigenvectors.transpose() * f->eigenvectors - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-10);
      }
    }
  }
}

TEST(Fim, TopEigenvectorMaximizesRayleighQuotient) {
  const auto stack = oracle::random_stack(5, 3, 3);
  const std::vector<double> y{0.0, 1.0, 1.0};
  const auto f = fim(stack, y, FimMethod::kChainRule);
  const Eigen::VectorXd top = f.eigenvectors.col(0);
  const double best = top.dot(f.matrix * top) / top.squaredNorm();
  SeededRng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    v /= v.cwiseAbs().maxCoeff();
    EXPECT_LE(v.dot(f.matrix * v) / v.squaredNorm(), best * (1.0 + 1e-12));
  }
}

TEST(Fim, AsymmetryWarning) {
  Eigen::Matrix2d m;
  m << 1.0, 0.5, 0.4, 1.0;
  const auto r = fim_of(m);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(r.matrix(0, 1), 0.45);
  EXPECT_TRUE(fim_of(Eigen::Matrix2d::Identity()).warnings.empty());
}

TEST(ParseFimMethod, Names) {
  EXPECT_EQ(parse_fim_method("chain"), FimMethod::kChainRule);
  EXPECT_EQ(parse_fim_method("oracle"), FimMethod::kScoreOracle);
  EXPECT_THROW(parse_fim_method("both"), std::invalid_argument);
}

TEST(StrongestPoison, AxisAligned) {
  Eigen::Matrix2d m;
  m << 4.0, 0.0, 0.0, 1.0;
  const auto p = strongest_poison(fim_of(m), 0.05);
  EXPECT_NEAR(p.delta_y[0], 0.05, 1e-15);
  EXPECT_NEAR(p.delta_y[1], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.source_eigenvalue, 4.0);
}

TEST(StrongestPoison, ZeroMatrixIsError) {
  EXPECT_THROW(strongest_poison(fim_of(Eigen::Matrix2d::Zero()), 0.05), NoUnstableDirectionError);
  EXPECT_THROW(strongest_poison(fim_of(Eigen::Matrix2d::Identity()), 0.0), std::invalid_argument);
}

TEST(StrongestPoison, MatchesIndependentEigensolver) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto stack = oracle::random_stack(seed, 3, 2, 2.0);
    const std::vector<double> y{1.0, 0.0, 1.0};
    const auto f = fim(stack, y, FimMethod::kChainRule);
    const auto p = strongest_poison(f, 0.05);
    // Power iteration on the same matrix.
    Eigen::Vector3d v(1.0, 0.7, 0.3);
    for (int it = 0; it < 2000; ++it) v = (f.matrix * v).normalized();
    const Eigen::Map<const Eigen::Vector3d> d(p.delta_y.data());
    EXPECT_NEAR(std::abs(d.normalized().dot(v)), 1.0, 1e-9);
    EXPECT_NEAR(d.cwiseAbs().maxCoeff(), 0.05, 1e-12);
    for (double c : p.delta_y) {
      if (std::abs(c) > 1e-12) {
        EXPECT_GT(c, 0.0);
        break;
      }
    }
  }
}

TEST(StrongestPoison, TieBrokenByResponse) {
  const auto f = fim_of(Eigen::Matrix2d::Identity() * 2.0);
  // Prefer whichever candidate moves the second component.
  const auto p = strongest_poison(f, 0.1, [](std::span<const double> d) { return std::abs(d[1]); });
  EXPECT_NEAR(std::abs(p.delta_y[1]), 0.1, 1e-15);
  const auto q = strongest_poison(f, 0.1, [](std::span<const double> d) { return std::abs(d[0]); });
  EXPECT_NEAR(std::abs(q.delta_y[0]), 0.1, 1e-15);
}

TEST(GenerationDiscrepancy, QuadraticResponse) {
  const auto stack = oracle::random_stack(7, 2, 3, 2.0);
  const std::vector<double> y{1.0, 0.0};
  const auto f = fim(stack, y, FimMethod::kChainRule);
  SeededRng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Vector2d v(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double expected = 0.5 * v.dot(f.matrix * v);
    const double eps = 2.5e-3;
    const std::vector<double> delta{eps * v(0), eps * v(1)};
    EXPECT_NEAR(generation_discrepancy(stack, y, delta) / (eps * eps), expected, 0.05 * expected);
  }
}

TEST(FimJson, ContainsEigenpairs) {
  const auto stack = oracle::random_stack(7, 2, 2);
  const std::vector<double> y{1.0, 0.0};
  const auto text = fim_json({fim(stack, y, FimMethod::kChainRule)});
  EXPECT_NE(text.find("\"method\": \"chain-rule\""), std::string::npos);
  EXPECT_NE(text.find("\"eigenvectors\""), std::string::npos);
}

}  // namespace
}  // namespace rgshield
