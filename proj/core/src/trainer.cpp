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

#include "rgshield/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json_schema.hpp"
#include "rgshield/artifacts.hpp"
#include "rgshield/errors.hpp"
#include "rgshield/random.hpp"

namespace rgshield {

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
    throw std::invalid_argument("init_scale must be > 0");
  }
  if (max_sweeps < 1 || inner_steps < 1) {
    throw std::invalid_argument("max_sweeps and inner_steps must be >= 1");
  }
}

std::string TrainingConfig::to_json() const {
  std::ostringstream out;
  out << "{\"learning_rate\": " << format_real(learning_rate) << ", \"max_sweeps\": " << max_sweeps
      << ", \"inner_steps\": " << inner_steps << ", \"tol\": " << format_real(tol)
      << ", \"seed\": " << seed << ", \"init_scale\": " << format_real(init_scale) << "}";
  return out.str();
}

std::string TrainingConfig::hash() const { return fnv1a_hex(to_json()); }

TrainingConfig training_config_from_json(std::string_view text, const std::string& path) {
  using namespace detail;
  const json doc = parse_json(text, path.empty() ? "$" : path);
  reject_unknown(doc, {"learning_rate", "max_sweeps", "inner_steps", "tol", "seed", "init_scale"},
                 path);
  TrainingConfig c;
  auto field = [&](std::string_view key) { return join_path(path, key); };
  if (doc.contains("learning_rate")) c.learning_rate = as_real(doc["learning_rate"], field("learning_rate"));
  if (doc.contains("max_sweeps")) c.max_sweeps = static_cast<int>(as_int(doc["max_sweeps"], field("max_sweeps")));
  if (doc.contains("inner_steps")) c.inner_steps = static_cast<int>(as_int(doc["inner_steps"], field("inner_steps")));
  if (doc.contains("tol")) c.tol = as_real(doc["tol"], field("tol"));
  if (doc.contains("seed")) c.seed = as_uint(doc["seed"], field("seed"));
  if (doc.contains("init_scale")) c.init_scale = as_real(doc["init_scale"], field("init_scale"));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.empty() ? "$" : path, e.what());
  }
  return c;
}

std::vector<LabeledExample> assemble_joint(const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("dataset is empty");
  return {data.pairs().begin(), data.pairs().end()};
}

namespace {

// Per-layer transfer matrices, computed once per target evaluation.
struct Transfers {
  std::vector<Eigen::MatrixXd> forward;     // index k-1
  std::vector<Eigen::MatrixXd> generation;  // index k-1

  explicit Transfers(const RbmStack& stack) {
    for (const auto& layer : stack.layers()) {
      forward.push_back(transfer_matrix(layer, Direction::kClassification));
      generation.push_back(transfer_matrix(layer, Direction::kGeneration));
    }
  }
};

Eigen::VectorXd as_vector(const Distribution& d) {
  const auto p = d.probs();
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

// q_level(· | x) for level in 0..N.
Eigen::VectorXd classify_to(const RbmStack& stack, const Transfers& t, const BinaryState& x,
                            int level) {
  if (level == 0) return as_vector(delta_distribution(x));
  Eigen::VectorXd q = as_vector(forward_conditional(stack.layer(1), x));
  for (int k = 2; k <= level; ++k) {
    q = t.forward[static_cast<std::size_t>(k - 1)] * q;
    q /= q.sum();
  }
  return q;
}

// q̃_level(· | y) for level in 0..N.
Eigen::VectorXd generate_to(const RbmStack& stack, const Transfers& t,
                            std::span<const double> y, int level) {
  const int depth = stack.depth();
  if (level == depth) return as_vector(clamp_distribution(y));
  Eigen::VectorXd q = as_vector(backward_conditional(stack.layer(depth), y));
  for (int k = depth - 1; k > level; --k) {
    q = t.generation[static_cast<std::size_t>(k - 1)] * q;
    q /= q.sum();
  }
  return q;
}

// Rows of `bits` are the binary states 0..2^n-1.
Eigen::MatrixXd state_bits(int n) {
  const Eigen::Index states = Eigen::Index{1} << n;
  Eigen::MatrixXd bits(states, n);
  for (Eigen::Index s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) bits(s, i) = static_cast<double>((s >> i) & 1);
  }
  return bits;
}

struct Moments {
  Eigen::MatrixXd pair;  // E[h_k h_{k-1}ᵀ]
  Eigen::VectorXd cur;   // E[h_k]
  Eigen::VectorXd prev;  // E[h_{k-1}]
};

Moments moments(std::span<const double> joint, int n) {
  const Eigen::Index states = Eigen::Index{1} << n;
  const Eigen::Map<const Eigen::MatrixXd> p(joint.data(), states, states);  // (cur, prev)
  const Eigen::MatrixXd bits = state_bits(n);
  return {bits.transpose() * p * bits, bits.transpose() * p.rowwise().sum(),
          bits.transpose() * p.colwise().sum().transpose()};
}

double log_sum_exp(const std::vector<double>& v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  double total = 0.0;
  for (double x : v) total += std::exp(x - top);
  return top + std::log(total);
}

RbmLayer step_layer(const RbmLayer& layer, const LayerGradient& g, double eta) {
  return {layer.W - eta * g.dW, layer.a - eta * g.da, layer.b - eta * g.db};
}

}  // namespace

LayerTarget layer_target(const RbmStack& stack, int k, std::span<const LabeledExample> joint) {
  if (k < 1 || k > stack.depth()) throw std::out_of_range("layer index out of range");
  const Transfers t(stack);
  const Eigen::Index states = Eigen::Index{1} << stack.dim();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(states, states);  // (h_k, h_{k-1})
  for (const auto& ex : joint) {
    const Eigen::VectorXd gen = generate_to(stack, t, ex.y.components(), k);
    const Eigen::VectorXd cls = classify_to(stack, t, ex.x, k - 1);
    r.noalias() += ex.weight * gen * cls.transpose();
  }
  return {Distribution::from_weights(std::vector<double>(r.data(), r.data() + r.size()))};
}

double LayerGradient::max_abs() const {
  return std::max({dW.cwiseAbs().maxCoeff(), da.cwiseAbs().maxCoeff(), db.cwiseAbs().maxCoeff()});
}

double layer_objective(const RbmLayer& layer, const LayerTarget& target) {
  const auto energies = joint_energies(layer);
  if (energies.size() != target.joint.size()) throw std::invalid_argument("target size mismatch");
  const double log_z = log_sum_exp(energies);
  double total = 0.0;
  for (std::size_t s = 0; s < energies.size(); ++s) {
    const double r = target.joint[s];
    if (r > 0.0) total += r * (std::log(r) - (energies[s] - log_z));
  }
  return total;
}

LayerGradient kl_gradient(const RbmLayer& layer, const LayerTarget& target) {
  const int n = layer.dim();
  const auto model = joint_distribution(layer);
  if (model.size() != target.joint.size()) throw std::invalid_argument("target size mismatch");
  const auto m = moments(model.probs(), n);
  const auto r = moments(target.joint.probs(), n);
  return {m.pair - r.pair, m.cur - r.cur, m.prev - r.prev};
}

double stack_objective(const RbmStack& stack, std::span<const LabeledExample> joint) {
  double total = 0.0;
  for (int k = 1; k <= stack.depth(); ++k) {
    total += layer_objective(stack.layer(k), layer_target(stack, k, joint));
  }
  return total;
}

TrainingResult train_layerwise(int n, int depth, const Dataset& data, const TrainingConfig& config,
                               const SweepObserver& observer) {
  config.validate();
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (data.dim() != n) throw std::invalid_argument("dataset dimension does not match n");
  const auto joint = assemble_joint(data);

  SeededRng rng(config.seed);
  std::vector<RbmLayer> layers;
  for (int k = 0; k < depth; ++k) {
    RbmLayer layer = RbmLayer::zeros(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) layer.W(i, j) = rng.uniform(-config.init_scale, config.init_scale);
    }
    for (int i = 0; i < n; ++i) layer.a(i) = rng.uniform(-config.init_scale, config.init_scale);
    for (int j = 0; j < n; ++j) layer.b(j) = rng.uniform(-config.init_scale, config.init_scale);
    layers.push_back(std::move(layer));
  }

  TrainingResult result{RbmStack(n, std::move(layers), config.seed), 0.0, {}, {}, false};
  RbmStack& stack = result.stack;
  double previous = stack_objective(stack, joint);
  if (!std::isfinite(previous)) throw TrainingDivergenceError(0, "initial objective is not finite");
  result.initial_objective = previous;

  constexpr int kMaxHalvings = 60;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    for (int k = 1; k <= depth; ++k) {
      const LayerTarget target = layer_target(stack, k, joint);
      RbmLayer layer = stack.layer(k);
      double current = layer_objective(layer, target);
      if (!std::isfinite(current)) throw TrainingDivergenceError(sweep, "layer objective is not finite");
      for (int step = 0; step < config.inner_steps; ++step) {
        const LayerGradient g = kl_gradient(layer, target);
        if (g.max_abs() == 0.0) break;
        double eta = config.learning_rate;
        bool accepted = false;
        for (int h = 0; h < kMaxHalvings && !accepted; ++h, eta *= 0.5) {
          RbmLayer candidate = step_layer(layer, g, eta);
          const double value = layer_objective(candidate, target);
          if (std::isfinite(value) && value <= current) {
            layer = std::move(candidate);
            current = value;
            accepted = true;
          }
        }
        if (!accepted) break;
        result.steps.push_back({sweep, k, current});
      }
      stack.set_layer(k, std::move(layer));
    }
    const double objective = stack_objective(stack, joint);
    if (!std::isfinite(objective)) throw TrainingDivergenceError(sweep, "summed objective is not finite");
    result.sweep_objectives.push_back(objective);
    if (observer) observer(sweep, stack);
    const bool done = previous - objective < config.tol;
    previous = objective;
    if (done) {
      result.converged = true;
      break;
    }
  }
  stack.set_training({previous, static_cast<int>(result.sweep_objectives.size()), config.hash()});
  return result;
}

double decode_accuracy(const RbmStack& stack, const Dataset& data) {
  double correct = 0.0;
  for (const auto& ex : data.pairs()) {
    if (argmax_state(classified_distribution(stack, ex.x)) == ex.y.rounded()) correct += ex.weight;
  }
  return correct;
}

std::string objective_trace_csv(const TrainingResult& result, const std::string& meta_line) {
  std::ostringstream out;
  if (!meta_line.empty()) out << meta_line << '\n';
  out << "sweep,objective\n";
  out << 0 << ',' << format_real(result.initial_objective) << '\n';
  for (std::size_t i = 0; i < result.sweep_objectives.size(); ++i) {
    out << i + 1 << ',' << format_real(result.sweep_objectives[i]) << '\n';
  }
  return out.str();
}

}  // namespace rgshield
