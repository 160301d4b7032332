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

#include "rgshield/poison.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "json_schema.hpp"
#include "rgshield/errors.hpp"

namespace rgshield {

namespace {

std::vector<double> clipped_sum(std::span<const double> y, std::span<const double> delta, double sign) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::clamp(y[i] + sign * delta[i], 0.0, 1.0);
  return out;
}

PoisonEntry poison_label(const RbmStack& stack, const OutputVector& y, const PoisonOptions& options) {
  PoisonEntry entry;
  const auto yc = y.components();
  entry.y.assign(yc.begin(), yc.end());
  entry.delta_y.assign(yc.size(), 0.0);
  if (options.budget == 0.0) return entry;

  const FimResult f = fim(stack, yc, options.method, options.fd_step);
  entry.top_eigenvalue = f.eigenvalues.size() ? f.eigenvalues(0) : 0.0;
  auto response = [&](std::span<const double> delta) {
    double best = 0.0;
    for (double sign : {1.0, -1.0}) {
      const auto moved = clipped_sum(yc, delta, sign);
      std::vector<double> applied(yc.size());
      for (std::size_t i = 0; i < applied.size(); ++i) applied[i] = moved[i] - yc[i];
      best = std::max(best, generation_discrepancy(stack, yc, applied));
    }
    return best;
  };
  PoisonVector pv;
  try {
    pv = strongest_poison(f, options.budget, response);
  } catch (const NoUnstableDirectionError&) {
    return entry;
  }
  double best = -1.0;
  for (double sign : {1.0, -1.0}) {
    const auto moved = clipped_sum(yc, pv.delta_y, sign);
    std::vector<double> applied(yc.size());
    for (std::size_t i = 0; i < applied.size(); ++i) applied[i] = moved[i] - yc[i];
    const double kl = generation_discrepancy(stack, yc, applied);
    if (kl > best) {
      best = kl;
      entry.delta_y = applied;
      entry.kl_discrepancy = kl;
    }
  }
  std::vector<double> poisoned(yc.size());
  for (std::size_t i = 0; i < poisoned.size(); ++i) poisoned[i] = yc[i] + entry.delta_y[i];
  entry.decode_ok = OutputVector(poisoned).rounded() == y.rounded();
  entry.poisoned = true;
  return entry;
}

}  // namespace

PoisonResult poison_dataset(const RbmStack& stack, const Dataset& clean, const PoisonOptions& options) {
  if (!(options.budget >= 0.0) || !(options.budget < 0.5)) {
    throw std::invalid_argument("poison budget must lie in [0, 0.5) so rounding recovers the clean label");
  }
  if (clean.dim() != stack.dim()) throw std::invalid_argument("dataset dimension does not match the stack");
  std::vector<OutputVector> labels;
  for (const auto& ex : clean.pairs()) {
    if (!ex.y.is_binary()) throw std::invalid_argument("clean labels must be binary");
    if (std::find(labels.begin(), labels.end(), ex.y) == labels.end()) labels.push_back(ex.y);
  }

  std::vector<std::future<PoisonEntry>> jobs;
  for (const auto& y : labels) {
    jobs.push_back(std::async(std::launch::async, [&stack, &options, y] { return poison_label(stack, y, options); }));
  }
  PoisonResult result;
  result.budget = options.budget;
  for (auto& job : jobs) result.entries.push_back(job.get());

  std::vector<LabeledExample> pairs;
  for (const auto& ex : clean.pairs()) {
    const auto at = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), ex.y) - labels.begin());
    const auto& entry = result.entries[at];
    if (!entry.decode_ok) throw std::logic_error("poisoned label no longer decodes to its clean label");
    std::vector<double> y(entry.y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += entry.delta_y[i];
    pairs.push_back({ex.x, OutputVector(std::move(y)), ex.weight});
  }
  result.dataset = Dataset(clean.dim(), std::move(pairs));
  return result;
}

std::string poison_report_json(const PoisonResult& result, const ArtifactMeta* meta) {
  using ordered = nlohmann::ordered_json;
  ordered doc;
  if (meta) {
    doc["config_hash"] = meta->config_hash;
    doc["tool_version"] = meta->tool_version;
  }
  doc["budget"] = result.budget;
  ordered entries = ordered::array();
  bool all_ok = true;
  for (const auto& e : result.entries) {
    ordered j;
    j["y"] = e.y;
    j["delta_y"] = e.delta_y;
    j["top_eigenvalue"] = e.top_eigenvalue;
    j["kl_discrepancy"] = e.kl_discrepancy;
    j["decode_ok"] = e.decode_ok;
    j["poisoned"] = e.poisoned;
    entries.push_back(j);
    all_ok = all_ok && e.decode_ok;
  }
  doc["entries"] = entries;
  doc["decode_invariance"] = all_ok;
  return doc.dump(2) + "\n";
}

}  // namespace rgshield
