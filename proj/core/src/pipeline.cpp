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

#include "rgshield/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json_schema.hpp"
#include "rgshield/clone.hpp"
#include "rgshield/dataset_io.hpp"
#include "rgshield/hamiltonian.hpp"
#include "rgshield/model_io.hpp"
#include "rgshield/poison.hpp"
#include "rgshield/stability.hpp"
#include "rgshield/tasks.hpp"

namespace rgshield {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;
using detail::json;

void ExperimentConfig::validate() const {
  if (task_name != "copy" && task_name != "parity" && task_name != "teacher") {
    throw std::invalid_argument("task.name: unknown task '" + task_name + "'");
  }
  if (n < 1 || n > kMaxStateBits / 2) throw std::invalid_argument("task.n: must be in [1, 8]");
  if (depth < 1) throw std::invalid_argument("N: must be >= 1");
  if (clone_depth < 0) throw std::invalid_argument("attack.N: must be >= 0");
  trainer.validate();
  (void)OperatorBasis::parse(basis, n);
  if (!(fd_step > 0.0)) throw std::invalid_argument("analysis.fd_step: must be > 0");
  if (!(tol_eig >= 0.0)) throw std::invalid_argument("analysis.tol_eig: must be >= 0");
  if (!(fixed_point_tol > 0.0)) throw std::invalid_argument("analysis.fixed_point_tol: must be > 0");
  if (fixed_point_window < 1) throw std::invalid_argument("analysis.window: must be >= 1");
  if (!(victim_scale > 0.0) || !std::isfinite(victim_scale)) {
    throw std::invalid_argument("analysis.victim_scale: must be > 0");
  }
  if (!(budget >= 0.0 && budget < 0.5)) throw std::invalid_argument("poison.budget: must be in [0, 0.5)");
  if (attack_seeds.empty()) throw std::invalid_argument("attack.seeds: must not be empty");
}

std::string ExperimentConfig::canonical_json() const {
  ordered doc;
  doc["task"] = {{"name", task_name}, {"n", n}, {"seed", task_seed}};
  doc["N"] = depth;
  doc["trainer"] = ordered::parse(trainer.to_json());
  doc["basis"] = basis;
  ordered analysis;
  analysis["fd_step"] = fd_step;
  analysis["tol_eig"] = tol_eig;
  analysis["fixed_point_tol"] = fixed_point_tol;
  analysis["window"] = fixed_point_window;
  analysis["fim_method"] = std::string(to_string(fim_method));
  analysis["victim_scale"] = victim_scale;
  doc["analysis"] = analysis;
  doc["poison"] = {{"budget", budget}};
  doc["attack"] = {{"seeds", attack_seeds}, {"N", clone_depth}};
  return doc.dump();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical_json()); }

ExperimentConfig experiment_config_from_json(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text, "$");
  reject_unknown(doc, {"task", "N", "trainer", "basis", "analysis", "poison", "attack", "output_dir"}, "");
  ExperimentConfig c;
  if (doc.contains("task")) {
    const auto& t = doc["task"];
    reject_unknown(t, {"name", "n", "seed"}, "task");
    if (t.contains("name")) c.task_name = as_string(t["name"], "task.name");
    if (t.contains("n")) c.n = static_cast<int>(as_int(t["n"], "task.n"));
    if (t.contains("seed")) c.task_seed = as_uint(t["seed"], "task.seed");
  }
  if (doc.contains("N")) c.depth = static_cast<int>(as_int(doc["N"], "N"));
  if (doc.contains("trainer")) c.trainer = training_config_from_json(doc["trainer"].dump(), "trainer");
  if (doc.contains("basis")) c.basis = as_string(doc["basis"], "basis");
  if (doc.contains("analysis")) {
    const auto& a = doc["analysis"];
    reject_unknown(a, {"fd_step", "tol_eig", "fixed_point_tol", "window", "fim_method", "victim_scale"}, "analysis");
    if (a.contains("fd_step")) c.fd_step = as_real(a["fd_step"], "analysis.fd_step");
    if (a.contains("tol_eig")) c.tol_eig = as_real(a["tol_eig"], "analysis.tol_eig");
    if (a.contains("fixed_point_tol")) c.fixed_point_tol = as_real(a["fixed_point_tol"], "analysis.fixed_point_tol");
    if (a.contains("window")) c.fixed_point_window = static_cast<int>(as_int(a["window"], "analysis.window"));
    if (a.contains("fim_method")) {
      try {
        c.fim_method = parse_fim_method(as_string(a["fim_method"], "analysis.fim_method"));
      } catch (const std::invalid_argument& e) {
        throw SchemaError("analysis.fim_method", e.what());
      }
    }
    if (a.contains("victim_scale")) c.victim_scale = as_real(a["victim_scale"], "analysis.victim_scale");
  }
  if (doc.contains("poison")) {
    const auto& p = doc["poison"];
    reject_unknown(p, {"budget"}, "poison");
    if (p.contains("budget")) c.budget = as_real(p["budget"], "poison.budget");
  }
  if (doc.contains("attack")) {
    const auto& a = doc["attack"];
    reject_unknown(a, {"seeds", "N"}, "attack");
    if (a.contains("seeds")) {
      if (!a["seeds"].is_array()) throw SchemaError("attack.seeds", "expected an array");
      c.attack_seeds.clear();
      for (std::size_t i = 0; i < a["seeds"].size(); ++i) {
        c.attack_seeds.push_back(as_uint(a["seeds"][i], index_path("attack.seeds", i)));
      }
    }
    if (a.contains("N")) c.clone_depth = static_cast<int>(as_int(a["N"], "attack.N"));
  }
  if (doc.contains("output_dir")) c.output_dir = as_string(doc["output_dir"], "output_dir");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    throw SchemaError(colon == std::string::npos ? "$" : what.substr(0, colon), what);
  }
  return c;
}

namespace {

std::string bits_tag(std::span<const double> v) {
  std::string s;
  for (double x : v) s += x >= 0.5 ? '1' : '0';
  return s;
}

class BundleWriter {
 public:
  BundleWriter(fs::path dir, ArtifactMeta meta) : dir_(std::move(dir)), meta_(std::move(meta)) {}

  void write(const std::string& name, std::string_view contents) {
    write_text_file(dir_ / name, contents);
    files_.push_back(name);
  }
  const ArtifactMeta& meta() const { return meta_; }
  std::string comment() const { return meta_comment_line(meta_); }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  ArtifactMeta meta_;
  std::vector<std::string> files_;
};

template <typename Fn>
auto stage(std::string_view name, const StageLogger& log, Fn&& fn) {
  if (log) log(name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(name), e.what());
  }
}

struct DirectionSummary {
  bool relevant = false;
  double max_radius = 0.0;
  double max_cumulative = 0.0;
  int converged = 0;
  int flows = 0;
};

}  // namespace

std::vector<std::string> full_pipeline(const ExperimentConfig& config, const StageLogger& log) {
  config.validate();
  BundleWriter out(config.output_dir, ArtifactMeta{config.hash(), std::string(kToolVersion)});
  {
    ordered cfg = ordered::parse(config.canonical_json());
    ordered doc;
    doc["config_hash"] = out.meta().config_hash;
    doc["tool_version"] = out.meta().tool_version;
    doc["config"] = cfg;
    out.write("config.json", doc.dump(2) + "\n");
  }

  const Dataset task = stage("gen-task", log, [&] {
    Dataset d = make_task(config.task_name, config.n, config.task_seed);
    out.write("task.jsonl", dataset_to_jsonl(d, &out.meta()));
    return d;
  });

  struct Trained {
    RbmStack victim;
    TrainingResult result;
  };
  const Trained trained = stage("train", log, [&] {
    TrainingResult r = train_layerwise(config.n, config.depth, task, config.trainer);
    RbmStack victim = r.stack.scaled(config.victim_scale);
    out.write("victim_model.json", save_model(victim, &out.meta()));
    out.write("objective_trace.csv", objective_trace_csv(r, out.comment()));
    return Trained{std::move(victim), std::move(r)};
  });
  const RbmStack& victim = trained.victim;

  const Dataset clean = victim_observations(victim, task);
  std::vector<OutputVector> labels;
  for (const auto& ex : clean.pairs()) {
    if (std::find(labels.begin(), labels.end(), ex.y) == labels.end()) labels.push_back(ex.y);
  }

  const BasisPtr basis = make_basis(OperatorBasis::parse(config.basis, config.n));
  auto analyse = [&](Direction direction, std::span<const double> cond, const std::string& tag) {
    const FlowTrace flow = flow_trace(victim, cond, direction, basis);
    const RelevanceReport rep = relevance_report(victim, flow, config.fd_step, config.tol_eig,
                                                 config.fixed_point_tol, config.fixed_point_window);
    const std::string dir(to_string(direction));
    out.write("flow_" + dir + "_" + tag + ".csv", flow_trace_csv(flow, out.comment()));
    out.write("stability_" + dir + "_" + tag + ".json", relevance_report_json(rep, flow, &out.meta()));
    return rep;
  };
  auto fold = [](DirectionSummary& s, const RelevanceReport& rep) {
    s.relevant = s.relevant || rep.has_relevant;
    for (const auto& l : rep.layers) s.max_radius = std::max(s.max_radius, l.spectral_radius);
    s.max_cumulative = std::max(s.max_cumulative, rep.cumulative_top_singular);
    s.converged += rep.fixed_point.converged ? 1 : 0;
    s.flows += 1;
  };
  DirectionSummary cls, gen;
  stage("stability", log, [&] {
    for (const auto& ex : task.pairs()) {
      const auto x = ex.x.as_reals();
      fold(cls, analyse(Direction::kClassification, x, "x" + ex.x.to_string()));
    }
    for (const auto& y : labels) {
      fold(gen, analyse(Direction::kGeneration, y.components(), "y" + bits_tag(y.components())));
    }
    return 0;
  });

  const std::vector<FimResult> fims = stage("fim", log, [&] {
    std::vector<FimResult> r;
    for (const auto& y : labels) r.push_back(fim(victim, y.components(), config.fim_method, config.fd_step));
    out.write("fim.json", fim_json(r, &out.meta()));
    return r;
  });
  double top_fim = 0.0;
  for (const auto& f : fims) top_fim = std::max(top_fim, f.eigenvalues.size() ? f.eigenvalues(0) : 0.0);

  AttackConfig attack;
  attack.depth = config.clone_depth;
  attack.trainer = config.trainer;
  attack.poison = {config.budget, config.fim_method, config.fd_step};
  attack.seeds = config.attack_seeds;

  const PoisonResult poison = stage("poison", log, [&] {
    PoisonResult p = poison_dataset(victim, clean, attack.poison);
    out.write("clean_observations.jsonl", dataset_to_jsonl(clean, &out.meta()));
    out.write("poisoned_observations.jsonl", dataset_to_jsonl(p.dataset, &out.meta()));
    out.write("poison_report.json", poison_report_json(p, &out.meta()));
    return p;
  });

  const CloneReport clones = stage("clone", log, [&] {
    CloneReport r = attack_experiment(victim, task, attack);
    out.write("clone_report.json", clone_report_json(r, &out.meta()));
    out.write("clone_summary.csv", clone_summary_csv(r, out.comment()));
    return r;
  });

  stage("report", log, [&] {
    ordered doc;
    doc["config_hash"] = out.meta().config_hash;
    doc["tool_version"] = out.meta().tool_version;
    ordered v;
    v["decode_accuracy"] = decode_accuracy(victim, task);
    v["objective_final"] = trained.result.sweep_objectives.empty() ? trained.result.initial_objective
                                                                   : trained.result.sweep_objectives.back();
    v["sweeps"] = static_cast<int>(trained.result.sweep_objectives.size());
    v["converged"] = trained.result.converged;
    v["scale"] = config.victim_scale;
    doc["victim"] = v;
    doc["basis_approximate"] = !basis->is_complete();
    ordered vul;
    vul["classification_relevant"] = cls.relevant;
    vul["max_spectral_radius"] = cls.max_radius;
    vul["max_cumulative_top_singular"] = cls.max_cumulative;
    vul["fixed_points_converged"] = cls.converged;
    vul["flows"] = cls.flows;
    doc["vulnerability"] = vul;
    ordered def;
    def["generation_relevant"] = gen.relevant;
    def["max_spectral_radius"] = gen.max_radius;
    def["max_cumulative_top_singular"] = gen.max_cumulative;
    def["fixed_points_converged"] = gen.converged;
    def["flows"] = gen.flows;
    def["max_fim_eigenvalue"] = top_fim;
    def["nonzero_fim"] = top_fim > kZeroFimTol;
    def["available"] = gen.relevant || top_fim > kZeroFimTol;
    doc["defence"] = def;
    ordered atk;
    atk["budget"] = config.budget;
    atk["poisoning_available"] = clones.poisoning_available;
    bool decode_ok = true;
    for (const auto& e : poison.entries) decode_ok = decode_ok && e.decode_ok;
    atk["decode_invariance"] = decode_ok;
    atk["clean_misclassification_mean"] = clones.clean_summary.misclassification_mean;
    atk["poisoned_misclassification_mean"] = clones.poisoned_summary.misclassification_mean;
    atk["clean_residual_mean"] = clones.clean_summary.residual_mean;
    atk["poisoned_residual_mean"] = clones.poisoned_summary.residual_mean;
    atk["residual_gap"] = clones.residual_gap;
    bool every_seed = true;
    bool identical = true;
    for (std::size_t i = 0; i < clones.clean.size(); ++i) {
      const auto& c = clones.clean[i].metrics;
      const auto& p = clones.poisoned[i].metrics;
      every_seed = every_seed && p.misclassification > c.misclassification;
      identical = identical && c.misclassification == p.misclassification && c.output_kl == p.output_kl &&
                  c.agreement == p.agreement && clones.clean[i].residual == clones.poisoned[i].residual;
    }
    atk["poisoned_misclassifies_more_every_seed"] = every_seed;
    atk["conditions_identical"] = identical;
    doc["attack"] = atk;
    doc["convergence_rule"] = "layerwise sweeps stop when a sweep improves the summed objective by less than tol";
    out.write("summary.json", doc.dump(2) + "\n");
    return 0;
  });
  return out.files();
}

ArtifactMeta artifact_meta(const fs::path& path) {
  const std::string text = read_text_file(path);
  const auto ext = path.extension().string();
  ArtifactMeta meta;
  if (ext == ".json") {
    const json doc = detail::parse_json(text, path.filename().string());
    detail::expect_object(doc, path.filename().string());
    const std::string where = path.filename().string();
    meta.config_hash = detail::as_string(detail::require(doc, "config_hash", where), where + ":config_hash");
    meta.tool_version = detail::as_string(detail::require(doc, "tool_version", where), where + ":tool_version");
    return meta;
  }
  const auto first = std::string_view(text).substr(0, text.find('\n'));
  if (!parse_meta_comment_line(first, meta)) {
    throw SchemaError(path.filename().string() + ":1", "missing '# config_hash=... tool_version=...' line");
  }
  return meta;
}

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

void validate_csv(const fs::path& path, const std::string& text) {
  const std::string where = path.filename().string();
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // provenance, checked by artifact_meta
  if (!std::getline(in, line)) throw SchemaError(where + ":2", "missing header");
  const auto header = split_csv(line);
  int row = 2;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw SchemaError(where + ":" + std::to_string(row), "expected " + std::to_string(header.size()) + " columns");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (header[c] == "condition") {
        if (cells[c] != "clean" && cells[c] != "poisoned") {
          throw SchemaError(where + ":" + std::to_string(row) + ":condition", "unknown condition");
        }
      } else if (!cells[c].empty() && !is_number(cells[c])) {
        throw SchemaError(where + ":" + std::to_string(row) + ":" + header[c], "not a number");
      }
    }
  }
}

}  // namespace

void validate_artifact(const fs::path& path) {
  (void)artifact_meta(path);
  const auto ext = path.extension().string();
  const std::string text = read_text_file(path);
  if (ext == ".json") {
    const json doc = detail::parse_json(text, path.filename().string());
    if (doc.contains("format_version")) (void)load_model(text);
  } else if (ext == ".jsonl") {
    (void)dataset_from_jsonl(text);
  } else if (ext == ".csv") {
    validate_csv(path, text);
  } else {
    throw SchemaError(path.filename().string(), "unknown artifact type");
  }
}

std::string bundle_report(const fs::path& bundle) {
  if (!fs::is_directory(bundle)) throw SchemaError(bundle.string(), "not a bundle directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(bundle)) {
    const auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".json" || ext == ".jsonl" || ext == ".csv")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw SchemaError(bundle.string(), "bundle holds no artifacts");
  std::optional<ArtifactMeta> first;
  std::string first_name;
  ordered names = ordered::array();
  for (const auto& f : files) {
    const ArtifactMeta meta = artifact_meta(f);
    if (!first) {
      first = meta;
      first_name = f.filename().string();
    } else if (meta.config_hash != first->config_hash || meta.tool_version != first->tool_version) {
      throw MixedProvenanceError("mixed provenance: " + f.filename().string() + " has config_hash " +
                                 meta.config_hash + " but " + first_name + " has " + first->config_hash);
    }
    names.push_back(f.filename().string());
  }
  ordered doc;
  doc["config_hash"] = first->config_hash;
  doc["tool_version"] = first->tool_version;
  doc["artifacts"] = names;
  const fs::path summary = bundle / "summary.json";
  if (fs::exists(summary)) {
    ordered s = ordered::parse(read_text_file(summary));
    s.erase("config_hash");
    s.erase("tool_version");
    doc["summary"] = s;
  }
  return doc.dump(2) + "\n";
}

}  // namespace rgshield
