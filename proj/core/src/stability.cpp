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

#include "rgshield/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "json_schema.hpp"
#include "rgshield/errors.hpp"

namespace rgshield {

CouplingVector layer_map(const RbmStack& stack, int k, const CouplingVector& g_in, Direction direction) {
  if (k < 1 || k > stack.depth()) throw std::out_of_range("layer index out of range");
  if (g_in.basis().dim() != stack.dim()) throw std::invalid_argument("basis dimension does not match the stack");
  const Distribution in = reconstruct_distribution(g_in);
  const Distribution out = propagate_step(transfer_matrix(stack.layer(k), direction), in);
  return extract_couplings(out, g_in.basis_ptr());
}

StabilityMatrix stability_matrix(const RbmStack& stack, int k, const CouplingVector& g_at,
                                 Direction direction, double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
  const auto m = static_cast<Eigen::Index>(g_at.size());
  StabilityMatrix t{k, direction, Eigen::MatrixXd::Zero(m, m), fd_step, !g_at.basis().is_complete()};
  const auto values = g_at.values();
  for (Eigen::Index beta = 0; beta < m; ++beta) {
    std::vector<double> plus(values.begin(), values.end());
    std::vector<double> minus(values.begin(), values.end());
    plus[static_cast<std::size_t>(beta)] += fd_step;
    minus[static_cast<std::size_t>(beta)] -= fd_step;
    try {
      const auto up = layer_map(stack, k, CouplingVector(g_at.basis_ptr(), plus), direction);
      const auto down = layer_map(stack, k, CouplingVector(g_at.basis_ptr(), minus), direction);
      for (Eigen::Index alpha = 0; alpha < m; ++alpha) {
        const auto a = static_cast<std::size_t>(alpha);
        t.matrix(alpha, beta) = (up[a] - down[a]) / (2.0 * fd_step);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("stability matrix column " + std::to_string(beta) + " (" +
                           g_at.basis().name(static_cast<std::size_t>(beta)) + "): " + e.what());
    }
    if (!t.matrix.col(beta).allFinite()) {
      throw NumericalError("stability matrix column " + std::to_string(beta) + " (" +
                           g_at.basis().name(static_cast<std::size_t>(beta)) + ") is not finite");
    }
  }
  return t;
}

LayerSpectrum spectrum_of(const StabilityMatrix& t) {
  LayerSpectrum s;
  s.layer = t.layer;
  s.matrix = t.matrix;
  if (t.matrix.size() == 0) return s;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(t.matrix, false);
  if (eig.info() != Eigen::Success) throw NumericalError("eigen decomposition failed");
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) s.eigenvalues.push_back(eig.eigenvalues()(i));
  std::stable_sort(s.eigenvalues.begin(), s.eigenvalues.end(),
                   [](auto a, auto b) { return std::abs(a) > std::abs(b); });
  s.spectral_radius = std::abs(s.eigenvalues.front());
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.matrix);
  const auto& sv = svd.singularValues();
  s.singular_values.assign(sv.data(), sv.data() + sv.size());
  return s;
}

RelevanceReport relevance_report(const RbmStack& stack, const FlowTrace& flow, double fd_step,
                                 double tol_eig, double fixed_point_tol, int fixed_point_window) {
  if (flow.couplings.empty()) throw std::invalid_argument("empty flow trace");
  const int depth = stack.depth();
  if (static_cast<int>(flow.couplings.size()) != depth) {
    throw std::invalid_argument("flow trace does not match the stack depth");
  }
  RelevanceReport report;
  report.direction = flow.direction;
  report.fd_step = fd_step;
  report.tol_eig = tol_eig;
  report.approximate = flow.approximate;
  const auto m = static_cast<Eigen::Index>(flow.couplings.front().size());
  report.cumulative = Eigen::MatrixXd::Identity(m, m);

  // Flow entry i holds layer flow.layers[i]. Both directions apply the next
  // layer's map to entry i to produce entry i+1.
  for (std::size_t i = 0; i + 1 < flow.couplings.size(); ++i) {
    const int k = flow.direction == Direction::kClassification ? flow.layers[i] + 1 : flow.layers[i];
    const auto t = stability_matrix(stack, k, flow.couplings[i], flow.direction, fd_step);
    report.layers.push_back(spectrum_of(t));
    // Generation builds T̃^(1)···T̃^(N−1) while visiting k = N−1..1, so each
    // new factor multiplies on the left; classification likewise gives
    // T^(N)···T^(2).
    report.cumulative = t.matrix * report.cumulative;
  }
  for (const auto& layer : report.layers) {
    for (const auto& ev : layer.eigenvalues) {
      if (std::abs(ev) > 1.0 + tol_eig) report.has_relevant = true;
    }
  }
  if (report.cumulative.size() > 0) {
    report.cumulative_top_singular = Eigen::JacobiSVD<Eigen::MatrixXd>(report.cumulative).singularValues()(0);
  }

  const int window = std::min<int>(fixed_point_window, static_cast<int>(flow.deltas.size()));
  if (window >= 1) {
    report.fixed_point = detect_fixed_point(flow, fixed_point_tol, window);
  } else {
    report.fixed_point.converged = false;
    report.fixed_point.tail_delta = std::numeric_limits<double>::infinity();
  }
  if (report.fixed_point.converged) {
    const int k = flow.direction == Direction::kClassification ? depth : 1;
    report.fixed_point_spectrum =
        spectrum_of(stability_matrix(stack, k, *report.fixed_point.fixed_couplings, flow.direction, fd_step));
  }
  return report;
}

namespace {

using detail::json;
using ordered = nlohmann::ordered_json;

ordered spectrum_json(const LayerSpectrum& s) {
  ordered eig = ordered::array();
  for (const auto& ev : s.eigenvalues) eig.push_back({ev.real(), ev.imag()});
  ordered out;
  out["layer"] = s.layer;
  out["eigenvalues"] = eig;
  out["singular_values"] = s.singular_values;
  out["spectral_radius"] = s.spectral_radius;
  return out;
}

}  // namespace

std::string relevance_report_json(const RelevanceReport& report, const FlowTrace& flow,
                                  const ArtifactMeta* meta) {
  ordered doc;
  if (meta) {
    doc["config_hash"] = meta->config_hash;
    doc["tool_version"] = meta->tool_version;
  }
  doc["direction"] = std::string(to_string(report.direction));
  doc["conditioning"] = flow.conditioning;
  doc["fd_step"] = report.fd_step;
  doc["tol_eig"] = report.tol_eig;
  doc["approximate"] = report.approximate;
  if (!flow.couplings.empty()) {
    std::vector<std::string> names;
    const auto& basis = flow.couplings.front().basis();
    for (std::size_t a = 0; a < basis.size(); ++a) names.push_back(basis.name(a));
    doc["basis"] = names;
  }
  ordered layers = ordered::array();
  for (const auto& s : report.layers) layers.push_back(spectrum_json(s));
  doc["layers"] = layers;
  doc["has_relevant"] = report.has_relevant;
  doc["cumulative_top_singular"] = report.cumulative_top_singular;
  ordered fp;
  fp["converged"] = report.fixed_point.converged;
  fp["tail_delta"] = report.fixed_point.tail_delta;  // inf serializes as null
  if (report.fixed_point_spectrum) fp["spectrum"] = spectrum_json(*report.fixed_point_spectrum);
  doc["fixed_point"] = fp;
  return doc.dump(2) + "\n";
}

}  // namespace rgshield
