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

#include "rgshield/clone.hpp"

#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>

#include "json_schema.hpp"

namespace rgshield {

TrainingResult clone_train(const Dataset& observations, int depth, const TrainingConfig& trainer,
                           std::uint64_t seed) {
  if (observations.empty()) throw std::invalid_argument("no observations to clone from");
  TrainingConfig config = trainer;
  config.seed = seed;
  return train_layerwise(observations.dim(), depth, observations, config);
}

ModelComparison compare_models(const RbmStack& victim, const RbmStack& clone,
                               std::span<const LabeledExample> eval) {
  if (victim.dim() != clone.dim()) throw std::invalid_argument("victim and clone dimensions differ");
  ModelComparison out;
  if (eval.empty()) return out;
  for (const auto& ex : eval) {
    const auto qv = classified_distribution(victim, ex.x);
    const auto qc = classified_distribution(clone, ex.x);
    out.output_kl += kl_divergence(qv, qc);
    const auto decoded = argmax_state(qc);
    if (decoded == argmax_state(qv)) out.agreement += 1.0;
    if (!(decoded == ex.y.rounded())) out.misclassification += 1.0;
  }
  const auto count = static_cast<double>(eval.size());
  out.output_kl /= count;
  out.agreement /= count;
  out.misclassification /= count;
  return out;
}

Dataset victim_observations(const RbmStack& victim, const Dataset& task) {
  std::vector<LabeledExample> pairs;
  for (const auto& ex : task.pairs()) {
    pairs.push_back({ex.x, OutputVector::from_state(argmax_state(classified_distribution(victim, ex.x))), ex.weight});
  }
  return Dataset(task.dim(), std::move(pairs));
}

namespace {

CloneRun run_condition(const RbmStack& victim, const Dataset& observations, const Dataset& task, int depth,
                       const TrainingConfig& trainer, std::uint64_t seed, const char* condition) {
  TrainingConfig config = trainer;
  config.seed = seed;
  CloneRun run;
  run.condition = condition;
  run.seed = seed;
  const auto result = train_layerwise(observations.dim(), depth, observations, config,
                                      [&](int, const RbmStack& stack) {
                                        run.output_kl_trace.push_back(
                                            compare_models(victim, stack, task.pairs()).output_kl);
                                      });
  run.residual = result.sweep_objectives.empty() ? result.initial_objective : result.sweep_objectives.back();
  run.sweeps = static_cast<int>(result.sweep_objectives.size());
  run.converged = result.converged;
  run.metrics = compare_models(victim, result.stack, task.pairs());
  return run;
}

ConditionSummary summarize(const std::vector<CloneRun>& runs) {
  ConditionSummary s;
  if (runs.empty()) return s;
  auto stats = [&](auto get, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& r : runs) mean += get(r);
    mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const auto& r : runs) var += (get(r) - mean) * (get(r) - mean);
    sd = runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
  };
  stats([](const CloneRun& r) { return r.residual; }, s.residual_mean, s.residual_std);
  stats([](const CloneRun& r) { return r.metrics.output_kl; }, s.output_kl_mean, s.output_kl_std);
  stats([](const CloneRun& r) { return r.metrics.misclassification; }, s.misclassification_mean,
        s.misclassification_std);
  stats([](const CloneRun& r) { return r.metrics.agreement; }, s.agreement_mean, s.agreement_std);
  return s;
}

}  // namespace

CloneReport attack_experiment(const RbmStack& victim, const Dataset& task, const AttackConfig& config) {
  if (task.dim() != victim.dim()) throw std::invalid_argument("task dimension does not match the victim");
  if (config.seeds.empty()) throw std::invalid_argument("attack needs at least one seed");
  config.trainer.validate();
  const int depth = config.depth > 0 ? config.depth : victim.depth();

  CloneReport report;
  report.budget = config.poison.budget;
  report.clean_observations = victim_observations(victim, task);
  report.poison = poison_dataset(victim, report.clean_observations, config.poison);
  for (const auto& e : report.poison.entries) report.poisoning_available = report.poisoning_available || e.poisoned;

  std::vector<std::future<CloneRun>> clean_jobs;
  std::vector<std::future<CloneRun>> poisoned_jobs;
  for (auto seed : config.seeds) {
    clean_jobs.push_back(std::async(std::launch::async, [&, seed] {
      return run_condition(victim, report.clean_observations, task, depth, config.trainer, seed, "clean");
    }));
    poisoned_jobs.push_back(std::async(std::launch::async, [&, seed] {
      return run_condition(victim, report.poison.dataset, task, depth, config.trainer, seed, "poisoned");
    }));
  }
  for (auto& job : clean_jobs) report.clean.push_back(job.get());
  for (auto& job : poisoned_jobs) report.poisoned.push_back(job.get());
  report.clean_summary = summarize(report.clean);
  report.poisoned_summary = summarize(report.poisoned);
  report.residual_gap = report.poisoned_summary.residual_mean - report.clean_summary.residual_mean;
  return report;
}

namespace {

using ordered = nlohmann::ordered_json;

ordered run_json(const CloneRun& r) {
  ordered j;
  j["condition"] = r.condition;
  j["seed"] = r.seed;
  j["residual"] = r.residual;
  j["sweeps"] = r.sweeps;
  j["converged"] = r.converged;
  j["output_kl"] = r.metrics.output_kl;
  j["misclassification"] = r.metrics.misclassification;
  j["agreement"] = r.metrics.agreement;
  j["output_kl_trace"] = r.output_kl_trace;
  return j;
}

ordered summary_json(const ConditionSummary& s) {
  ordered j;
  j["residual_mean"] = s.residual_mean;
  j["residual_std"] = s.residual_std;
  j["output_kl_mean"] = s.output_kl_mean;
  j["output_kl_std"] = s.output_kl_std;
  j["misclassification_mean"] = s.misclassification_mean;
  j["misclassification_std"] = s.misclassification_std;
  j["agreement_mean"] = s.agreement_mean;
  j["agreement_std"] = s.agreement_std;
  return j;
}

}  // namespace

std::string clone_report_json(const CloneReport& report, const ArtifactMeta* meta) {
  ordered doc;
  if (meta) {
    doc["config_hash"] = meta->config_hash;
    doc["tool_version"] = meta->tool_version;
  }
  doc["budget"] = report.budget;
  doc["poisoning_available"] = report.poisoning_available;
  ordered runs = ordered::array();
  for (const auto& r : report.clean) runs.push_back(run_json(r));
  for (const auto& r : report.poisoned) runs.push_back(run_json(r));
  doc["runs"] = runs;
  doc["clean"] = summary_json(report.clean_summary);
  doc["poisoned"] = summary_json(report.poisoned_summary);
  doc["residual_gap"] = report.residual_gap;
  bool all_worse = !report.clean.empty();
  for (std::size_t i = 0; i < report.clean.size(); ++i) {
    all_worse = all_worse &&
                report.poisoned[i].metrics.misclassification > report.clean[i].metrics.misclassification;
  }
  doc["poisoned_misclassifies_more_every_seed"] = all_worse;
  return doc.dump(2) + "\n";
}

std::string clone_summary_csv(const CloneReport& report, const std::string& meta_line) {
  std::ostringstream out;
  if (!meta_line.empty()) out << meta_line << '\n';
  out << "condition,seed,residual,output_kl,misclassification,agreement\n";
  auto row = [&](const CloneRun& r) {
    out << r.condition << ',' << r.seed << ',' << format_real(r.residual) << ','
        << format_real(r.metrics.output_kl) << ',' << format_real(r.metrics.misclassification) << ','
        << format_real(r.metrics.agreement) << '\n';
  };
  for (const auto& r : report.clean) row(r);
  for (const auto& r : report.poisoned) row(r);
  return out.str();
}

}  // namespace rgshield
