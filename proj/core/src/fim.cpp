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

#include "rgshield/fim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "json_schema.hpp"
#include "rgshield/errors.hpp"

namespace rgshield {

namespace {

void check_output(const RbmStack& stack, std::span<const double> y) {
  if (static_cast<int>(y.size()) != stack.dim()) throw std::invalid_argument("output dimension mismatch");
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("output components must be finite");
  }
}

// Asymmetry above this before symmetrization is reported.
constexpr double kAsymmetryWarn = 1e-6;

}  // namespace

LastLayerCouplings last_layer_couplings(const RbmStack& stack, std::span<const double> y,
                                        const BasisPtr& basis) {
  check_output(stack, y);
  if (!basis || basis->dim() != stack.dim()) throw std::invalid_argument("basis dimension does not match the stack");
  const int n = stack.dim();
  const auto& last = stack.layer(stack.depth());
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd field = last.W.transpose() * yv + last.b;
  std::vector<double> g(basis->size(), 0.0);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis->size()), n);
  for (int j = 0; j < n; ++j) {
    const auto alpha = basis->find(1u << j);
    if (!alpha) throw std::invalid_argument("basis is missing the singleton {" + std::to_string(j) + "}");
    g[*alpha] = -field(j);
    for (int i = 0; i < n; ++i) jac(static_cast<Eigen::Index>(*alpha), i) = -last.W(i, j);
  }
  return {CouplingVector(basis, std::move(g), !basis->is_complete()), std::move(jac)};
}

Eigen::MatrixXd coupling_jacobian(const RbmStack& stack, std::span<const double> y, const BasisPtr& basis,
                                  double fd_step) {
  auto last = last_layer_couplings(stack, y, basis);
  Eigen::MatrixXd jac = std::move(last.jacobian);
  if (stack.depth() == 1) return jac;
  // Entry i of the generation trace holds g̃^(N−1−i); the map at entry i is
  // T̃^(N−1−i). Left-multiplying in visiting order yields T̃^(1)···T̃^(N−1)·J.
  const FlowTrace flow = flow_trace(stack, y, Direction::kGeneration, basis);
  for (std::size_t i = 0; i + 1 < flow.couplings.size(); ++i) {
    const auto t = stability_matrix(stack, flow.layers[i], flow.couplings[i], Direction::kGeneration, fd_step);
    jac = t.matrix * jac;
  }
  return jac;
}

Eigen::MatrixXd operator_covariance(const Distribution& dist, const OperatorBasis& basis) {
  if (dist.bits() != basis.dim()) throw std::invalid_argument("distribution and basis dimensions differ");
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd ops(m);
  for (std::size_t s = 0; s < dist.size(); ++s) {
    const double p = dist[s];
    if (p == 0.0) continue;
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto mask = basis.masks()[static_cast<std::size_t>(a)];
      ops(a) = (static_cast<std::uint32_t>(s) & mask) == mask ? 1.0 : 0.0;
    }
    mean += p * ops;
    second.noalias() += p * ops * ops.transpose();
  }
  Eigen::MatrixXd cov = second - mean * mean.transpose();
  return 0.5 * (cov + cov.transpose());
}

std::string_view to_string(FimMethod m) {
  return m == FimMethod::kChainRule ? "chain-rule" : "score-oracle";
}

FimMethod parse_fim_method(std::string_view text) {
  if (text == "chain" || text == "chain-rule") return FimMethod::kChainRule;
  if (text == "oracle" || text == "score-oracle") return FimMethod::kScoreOracle;
  throw std::invalid_argument("unknown FIM method '" + std::string(text) + "' (expected chain or oracle)");
}

FimResult decompose_fim(std::vector<double> y, Eigen::MatrixXd matrix, FimMethod method) {
  FimResult r;
  r.y = std::move(y);
  r.method = method;
  if (!matrix.allFinite()) throw NumericalError("Fisher matrix has non-finite entries");
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryWarn) {
    r.warnings.push_back("Fisher matrix asymmetry " + std::to_string(asym) + " exceeds 1e-6 before symmetrization");
  }
  r.matrix = 0.5 * (matrix + matrix.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.matrix);
  if (eig.info() != Eigen::Success) throw NumericalError("Fisher eigen decomposition failed");
  r.eigenvalues = eig.eigenvalues().reverse();
  r.eigenvectors = eig.eigenvectors().rowwise().reverse();
  return r;
}

FimResult fim(const RbmStack& stack, std::span<const double> y, FimMethod method, double fd_step) {
  check_output(stack, y);
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
  const int n = stack.dim();
  std::vector<double> yv(y.begin(), y.end());
  if (method == FimMethod::kChainRule) {
    const BasisPtr basis = make_basis(OperatorBasis::complete(n));
    const Eigen::MatrixXd jac = coupling_jacobian(stack, y, basis, fd_step);
    const Eigen::MatrixXd cov = operator_covariance(generated_distribution(stack, y), *basis);
    return decompose_fim(std::move(yv), jac.transpose() * cov * jac, method);
  }

  const Distribution q = generated_distribution(stack, y);
  const auto states = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXd score(states, n);
  auto log_q = [&](int i, double shift) {
    std::vector<double> moved = yv;
    moved[static_cast<std::size_t>(i)] += shift;
    const Distribution d = generated_distribution(stack, moved);
    Eigen::VectorXd out(states);
    for (Eigen::Index s = 0; s < states; ++s) out(s) = std::log(d[static_cast<std::size_t>(s)]);
    return out;
  };
  for (int i = 0; i < n; ++i) {
    score.col(i) = (log_q(i, -2.0 * fd_step) - 8.0 * log_q(i, -fd_step) + 8.0 * log_q(i, fd_step) -
                    log_q(i, 2.0 * fd_step)) /
                   (12.0 * fd_step);
  }
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s < states; ++s) {
    f.noalias() += q[static_cast<std::size_t>(s)] * score.row(s).transpose() * score.row(s);
  }
  return decompose_fim(std::move(yv), f, method);
}

PoisonVector strongest_poison(const FimResult& fim, double budget, const ResponseFn& response) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw std::invalid_argument("poison budget must be > 0");
  if (fim.eigenvalues.size() == 0 || fim.eigenvalues(0) <= kZeroFimTol) {
    throw NoUnstableDirectionError("Fisher matrix is numerically zero: no output perturbation changes generation");
  }
  const double top = fim.eigenvalues(0);
  std::vector<Eigen::VectorXd> candidates;
  for (Eigen::Index i = 0; i < fim.eigenvalues.size() && top - fim.eigenvalues(i) < kEigenTieTol; ++i) {
    Eigen::VectorXd v = fim.eigenvectors.col(i);
    v *= budget / v.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (std::abs(v(j)) > 1e-12 * budget) {
        if (v(j) < 0.0) v = -v;
        break;
      }
    }
    candidates.push_back(std::move(v));
  }
  std::size_t best = 0;
  if (candidates.size() > 1 && response) {
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double value = response(std::span<const double>(candidates[c].data(), static_cast<std::size_t>(candidates[c].size())));
      if (value > best_value) {
        best_value = value;
        best = c;
      }
    }
  }
  const auto& v = candidates[best];
  return {std::vector<double>(v.data(), v.data() + v.size()), budget, top};
}

double generation_discrepancy(const RbmStack& stack, std::span<const double> y, std::span<const double> delta) {
  if (delta.size() != y.size()) throw std::invalid_argument("delta dimension mismatch");
  std::vector<double> moved(y.begin(), y.end());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += delta[i];
  return kl_divergence(generated_distribution(stack, y), generated_distribution(stack, moved));
}

std::string fim_json(const std::vector<FimResult>& results, const ArtifactMeta* meta) {
  using ordered = nlohmann::ordered_json;
  ordered doc;
  if (meta) {
    doc["config_hash"] = meta->config_hash;
    doc["tool_version"] = meta->tool_version;
  }
  ordered list = ordered::array();
  for (const auto& r : results) {
    ordered entry;
    entry["y"] = r.y;
    entry["method"] = std::string(to_string(r.method));
    ordered rows = ordered::array();
    for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) {
      std::vector<double> row(r.matrix.cols());
      for (Eigen::Index j = 0; j < r.matrix.cols(); ++j) row[static_cast<std::size_t>(j)] = r.matrix(i, j);
      rows.push_back(row);
    }
    entry["matrix"] = rows;
    entry["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
    ordered vecs = ordered::array();
    for (Eigen::Index c = 0; c < r.eigenvectors.cols(); ++c) {
      vecs.push_back(std::vector<double>(r.eigenvectors.col(c).data(), r.eigenvectors.col(c).data() + r.eigenvectors.rows()));
    }
    entry["eigenvectors"] = vecs;
    entry["warnings"] = r.warnings;
    list.push_back(entry);
  }
  doc["results"] = list;
  return doc.dump(2) + "\n";
}

}  // namespace rgshield
