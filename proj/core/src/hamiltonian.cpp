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

#include "rgshield/hamiltonian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rgshield/artifacts.hpp"
#include "rgshield/errors.hpp"

namespace rgshield {

namespace {

std::vector<int> members(std::uint32_t mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

bool subset_less(std::uint32_t a, std::uint32_t b) {
  const int ca = std::popcount(a);
  const int cb = std::popcount(b);
  if (ca != cb) return ca < cb;
  return members(a) < members(b);
}

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  std::size_t pos = 0;
  try {
    value = std::stoi(std::string(text), &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

OperatorBasis::OperatorBasis(int n, std::vector<std::uint32_t> masks)
    : n_(n), masks_(std::move(masks)) {
  check_state_capacity(n);
  for (auto m : masks_) {
    if (m == 0) throw std::invalid_argument("operator subsets must be nonempty");
    if (n < 32 && (m >> n) != 0) throw std::invalid_argument("operator subset out of range");
  }
  std::sort(masks_.begin(), masks_.end(), subset_less);
  if (std::adjacent_find(masks_.begin(), masks_.end()) != masks_.end()) {
    throw std::invalid_argument("duplicate operator subset");
  }
  complete_ = masks_.size() + 1 == (std::size_t{1} << n);
}

OperatorBasis OperatorBasis::complete(int n) { return up_to_order(n, n); }

OperatorBasis OperatorBasis::up_to_order(int n, int order) {
  check_state_capacity(n);
  if (order < 1) throw std::invalid_argument("basis order must be >= 1");
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < (std::uint32_t{1} << n); ++m) {
    if (std::popcount(m) <= order) masks.push_back(m);
  }
  return OperatorBasis(n, std::move(masks));
}

OperatorBasis OperatorBasis::from_subsets(int n, std::vector<std::uint32_t> masks) {
  return OperatorBasis(n, std::move(masks));
}

OperatorBasis OperatorBasis::parse(std::string_view text, int n) {
  text = trim(text);
  if (text == "complete") return complete(n);
  if (text.starts_with("order:")) return up_to_order(n, parse_int(text.substr(6), "basis order"));
  std::vector<std::uint32_t> masks;
  while (!text.empty()) {
    const auto semi = text.find(';');
    auto subset = trim(text.substr(0, semi));
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    std::uint32_t mask = 0;
    while (!subset.empty()) {
      const auto comma = subset.find(',');
      const int i = parse_int(trim(subset.substr(0, comma)), "basis index");
      if (i < 0 || i >= n) throw std::invalid_argument("basis index out of range");
      if (mask & (1u << i)) throw std::invalid_argument("repeated index in basis subset");
      mask |= 1u << i;
      subset = comma == std::string_view::npos ? std::string_view{} : subset.substr(comma + 1);
    }
    if (mask == 0) throw std::invalid_argument("empty subset in basis list");
    masks.push_back(mask);
  }
  if (masks.empty()) throw std::invalid_argument("empty basis list");
  return OperatorBasis(n, std::move(masks));
}

std::string OperatorBasis::name(std::size_t alpha) const {
  std::string out = "g{";
  bool first = true;
  for (int i : members(masks_.at(alpha))) {
    if (!first) out += ',';
    out += std::to_string(i);
    first = false;
  }
  return out + "}";
}

std::optional<std::size_t> OperatorBasis::find(std::uint32_t mask) const {
  for (std::size_t a = 0; a < masks_.size(); ++a) {
    if (masks_[a] == mask) return a;
  }
  return std::nullopt;
}

BasisPtr make_basis(OperatorBasis basis) {
  return std::make_shared<const OperatorBasis>(std::move(basis));
}

CouplingVector::CouplingVector(BasisPtr basis, std::vector<double> values, bool approximate)
    : basis_(std::move(basis)), values_(std::move(values)), approximate_(approximate) {
  if (!basis_) throw std::invalid_argument("coupling vector needs a basis");
  if (values_.size() != basis_->size()) {
    throw std::invalid_argument("coupling count does not match basis size");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericalError("non-finite coupling");
  }
}

double CouplingVector::max_abs_diff(const CouplingVector& other) const {
  if (other.size() != size()) throw std::invalid_argument("coupling size mismatch");
  double m = 0.0;
  for (std::size_t a = 0; a < size(); ++a) m = std::max(m, std::abs(values_[a] - other.values_[a]));
  return m;
}

CouplingVector extract_couplings(const Distribution& dist, const BasisPtr& basis) {
  if (!basis) throw std::invalid_argument("null basis");
  const int n = basis->dim();
  if (dist.bits() != n) throw std::invalid_argument("distribution and basis dimensions differ");
  const std::size_t states = dist.size();
  std::vector<double> energy(states);
  for (std::size_t s = 0; s < states; ++s) {
    if (!(dist[s] > 0.0)) {
      throw PositivityError("cannot extract couplings: zero probability at state " +
                            BinaryState::from_index(static_cast<std::uint32_t>(s), n).to_string());
    }
    energy[s] = -std::log(dist[s]);
  }

  if (basis->is_complete()) {
    // Möbius transform: f[S] = Σ_{T⊆S} (−1)^{|S|−|T|} E(1_T). The state index
    // of 1_T is T's mask, so this runs in place.
    for (int i = 0; i < n; ++i) {
      const std::size_t bit = std::size_t{1} << i;
      for (std::size_t m = 0; m < states; ++m) {
        if (m & bit) energy[m] -= energy[m ^ bit];
      }
    }
    std::vector<double> g;
    g.reserve(basis->size());
    for (auto mask : basis->masks()) g.push_back(energy[mask]);
    return CouplingVector(basis, std::move(g));
  }

  // Truncated: E(h) ≈ c + Σ_S g_S O_S(h).
  const auto rows = static_cast<Eigen::Index>(states);
  const auto cols = static_cast<Eigen::Index>(basis->size() + 1);
  Eigen::MatrixXd ops = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index s = 0; s < rows; ++s) {
    ops(s, 0) = 1.0;
    for (std::size_t a = 0; a < basis->size(); ++a) {
      const auto mask = basis->masks()[a];
      if ((static_cast<std::uint32_t>(s) & mask) == mask) ops(s, static_cast<Eigen::Index>(a + 1)) = 1.0;
    }
    rhs(s) = energy[static_cast<std::size_t>(s)];
  }
  const Eigen::VectorXd fit = ops.colPivHouseholderQr().solve(rhs);
  return CouplingVector(basis, std::vector<double>(fit.data() + 1, fit.data() + fit.size()), true);
}

Distribution reconstruct_distribution(const CouplingVector& g) {
  const auto& basis = g.basis();
  const int n = basis.dim();
  const std::size_t states = std::size_t{1} << n;
  // Zeta transform: H(h) = Σ_{S⊆h} g_S.
  std::vector<double> h(states, 0.0);
  for (std::size_t a = 0; a < basis.size(); ++a) h[basis.masks()[a]] = g[a];
  for (int i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t m = 0; m < states; ++m) {
      if (m & bit) h[m] += h[m ^ bit];
    }
  }
  for (auto& v : h) v = -v;
  return Distribution::from_log_weights(h);
}

FlowTrace flow_trace(const RbmStack& stack, std::span<const double> conditioning,
                     Direction direction, const BasisPtr& basis) {
  if (!basis || basis->dim() != stack.dim()) {
    throw std::invalid_argument("basis dimension does not match the stack");
  }
  FlowTrace trace;
  trace.direction = direction;
  trace.conditioning.assign(conditioning.begin(), conditioning.end());
  const int depth = stack.depth();
  if (direction == Direction::kClassification) {
    std::vector<std::uint8_t> bits;
    for (double v : conditioning) {
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("classification conditioning must be binary");
      bits.push_back(static_cast<std::uint8_t>(v));
    }
    const auto flow = classify_propagate(stack, BinaryState(std::move(bits)));
    for (int k = 1; k <= depth; ++k) {
      trace.layers.push_back(k);
      trace.couplings.push_back(extract_couplings(flow.dists[static_cast<std::size_t>(k)], basis));
    }
  } else {
    const auto flow = generate_propagate(stack, conditioning);
    for (int k = depth - 1; k >= 0; --k) {
      trace.layers.push_back(k);
      trace.couplings.push_back(extract_couplings(flow.dists[static_cast<std::size_t>(k)], basis));
    }
  }
  for (std::size_t i = 1; i < trace.couplings.size(); ++i) {
    trace.deltas.push_back(trace.couplings[i].max_abs_diff(trace.couplings[i - 1]));
  }
  trace.approximate = !basis->is_complete();
  return trace;
}

FixedPointVerdict detect_fixed_point(const FlowTrace& trace, double tol, int window) {
  if (window < 1 || static_cast<std::size_t>(window) > trace.deltas.size()) {
    throw std::invalid_argument("fixed-point window must be between 1 and the number of flow steps (" +
                                std::to_string(trace.deltas.size()) + ")");
  }
  FixedPointVerdict verdict;
  verdict.tail_delta = *std::max_element(trace.deltas.end() - window, trace.deltas.end());
  verdict.converged = verdict.tail_delta < tol;
  if (verdict.converged) verdict.fixed_couplings = trace.couplings.back();
  return verdict;
}

std::string flow_trace_csv(const FlowTrace& trace, const std::string& meta_line) {
  std::ostringstream out;
  if (!meta_line.empty()) out << meta_line << '\n';
  out << "layer_index";
  if (!trace.couplings.empty()) {
    const auto& basis = trace.couplings.front().basis();
    for (std::size_t a = 0; a < basis.size(); ++a) out << ",\"" << basis.name(a) << '"';
  }
  out << ",delta\n";
  for (std::size_t i = 0; i < trace.couplings.size(); ++i) {
    out << trace.layers[i];
    for (double v : trace.couplings[i].values()) out << ',' << format_real(v);
    out << ',';
    if (i > 0) out << format_real(trace.deltas[i - 1]);
    out << '\n';
  }
  return out.str();
}

}  // namespace rgshield
