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

#include "cli.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgshield/artifacts.hpp"
#include "rgshield/clone.hpp"
#include "rgshield/dataset_io.hpp"
#include "rgshield/errors.hpp"
#include "rgshield/fim.hpp"
#include "rgshield/hamiltonian.hpp"
#include "rgshield/model_io.hpp"
#include "rgshield/pipeline.hpp"
#include "rgshield/poison.hpp"
#include "rgshield/stability.hpp"
#include "rgshield/tasks.hpp"
#include "rgshield/trainer.hpp"

namespace rgshield::cli {

namespace {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

// "0110" for binary vectors, "0.5,1,0" for real ones.
std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> v;
  if (text.find(',') == std::string::npos && text.find('.') == std::string::npos) {
    for (char c : text) {
      if (c != '0' && c != '1') throw std::invalid_argument("bad vector '" + text + "'");
      v.push_back(c == '1' ? 1.0 : 0.0);
    }
  } else {
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double x = 0.0;
      try {
        x = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != cell.size()) throw std::invalid_argument("bad vector component '" + cell + "'");
      v.push_back(x);
    }
  }
  if (v.empty()) throw std::invalid_argument("empty vector");
  return v;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    unsigned long long s = 0;
    try {
      s = std::stoull(cell, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != cell.size()) throw std::invalid_argument("bad seed '" + cell + "'");
    seeds.push_back(s);
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

double frobenius(const Eigen::MatrixXd& m) { return m.norm(); }

struct Session {
  std::ostream& out;
  std::ostream& err;
  bool validate = false;
  std::vector<fs::path> written;
  ArtifactMeta meta;

  // Records the resolved settings and derives the provenance stamp from them.
  void resolve(const std::string& command, const ordered& settings, std::uint64_t seed) {
    meta.config_hash = fnv1a_hex(command + settings.dump());
    err << "rgshield " << command << ": config=" << settings.dump() << " seed=" << seed
        << " config_hash=" << meta.config_hash << '\n';
  }

  void emit(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
      out << contents;
      return;
    }
    write_text_file(path, contents);
    written.emplace_back(path);
    err << "wrote " << path << '\n';
  }
};

std::string sibling(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

TrainingConfig load_trainer_config(const std::string& path) {
  if (path.empty()) return {};
  return training_config_from_json(read_text_file(path));
}

ordered flow_json(const ConditionedFlow& flow) {
  ordered doc;
  doc["direction"] = std::string(to_string(flow.direction));
  doc["conditioning"] = flow.conditioning;
  ordered dists = ordered::array();
  for (const auto& d : flow.dists) dists.push_back(std::vector<double>(d.probs().begin(), d.probs().end()));
  doc["dists"] = dists;
  return doc;
}

bool use_color(const std::ostream& err) {
  return &err == &std::cerr && std::getenv("NO_COLOR") == nullptr && ::isatty(STDERR_FILENO);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupling-flow diagnostics and output-poisoning defence for stacked RBMs", "rgshield"};
  app.require_subcommand(1);
  app.fallthrough();
  Session session{out, err, false, {}, {}};
  app.add_flag("--validate", session.validate, "Schema-check every written artifact");
  app.set_version_flag("--version", std::string(kToolVersion));

  std::function<void()> action;

  // gen-task
  std::string task_name = "copy";
  int task_n = 2;
  std::uint64_t task_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-task", "Write a toy labelled dataset");
  gen->add_option("--name", task_name, "copy | parity | teacher")->capture_default_str();
  gen->add_option("--n", task_n, "Node dimension")->capture_default_str();
  gen->add_option("--seed", task_seed, "Seed (teacher task)")->capture_default_str();
  gen->add_option("--out", gen_out, "Dataset file (JSONL)");
  gen->callback([&] {
    action = [&] {
      ordered s{{"name", task_name}, {"n", task_n}, {"seed", task_seed}};
      session.resolve("gen-task", s, task_seed);
      const Dataset d = make_task(task_name, task_n, task_seed);
      session.emit(gen_out, dataset_to_jsonl(d, &session.meta));
    };
  });

  // train
  std::string train_task, train_config, train_out, train_trace;
  std::optional<int> train_n;
  int train_depth = 2;
  auto* train = app.add_subcommand("train", "Layerwise training on a dataset");
  train->add_option("--task", train_task, "Dataset file (JSONL)")->required();
  train->add_option("--n", train_n, "Node dimension (defaults to the dataset's)");
  train->add_option("--N", train_depth, "Number of layers")->capture_default_str();
  train->add_option("--config", train_config, "Trainer config (JSON)");
  train->add_option("--out", train_out, "Model file")->required();
  train->add_option("--trace", train_trace, "Objective trace CSV (default <out>_trace.csv)");
  train->callback([&] {
    action = [&] {
      const Dataset data = load_dataset_file(train_task);
      const int n = train_n.value_or(data.dim());
      if (n != data.dim()) throw std::invalid_argument("--n does not match the dataset dimension");
      const TrainingConfig config = load_trainer_config(train_config);
      ordered s{{"task", train_task}, {"n", n}, {"N", train_depth}, {"trainer", ordered::parse(config.to_json())}};
      session.resolve("train", s, config.seed);
      const TrainingResult r = train_layerwise(n, train_depth, data, config);
      session.emit(train_out, save_model(r.stack, &session.meta));
      session.emit(train_trace.empty() ? sibling(train_out, "_trace.csv") : train_trace,
                   objective_trace_csv(r, meta_comment_line(session.meta)));
      err << "objective " << format_real(r.sweep_objectives.empty() ? r.initial_objective : r.sweep_objectives.back())
          << " after " << r.sweep_objectives.size() << " sweeps" << (r.converged ? " (converged)" : " (max_sweeps reached)")
          << ", decode accuracy " << decode_accuracy(r.stack, data) << '\n';
    };
  });

  // propagate
  std::string prop_model, prop_x, prop_y, prop_out;
  auto* prop = app.add_subcommand("propagate", "Per-layer distributions conditioned on x or y");
  prop->add_option("--model", prop_model, "Model file")->required();
  auto* px = prop->add_option("--x", prop_x, "Input state, e.g. 01 (classification)");
  auto* py = prop->add_option("--y", prop_y, "Output vector, e.g. 1,0.3 (generation)");
  px->excludes(py);
  prop->add_option("--out", prop_out, "JSON file (default stdout)");
  prop->callback([&] {
    action = [&] {
      if (prop_x.empty() == prop_y.empty()) throw CLI::ValidationError("propagate", "exactly one of --x or --y is required");
      const RbmStack stack = load_model_file(prop_model);
      ordered s{{"model", prop_model}, {"x", prop_x}, {"y", prop_y}};
      session.resolve("propagate", s, stack.seed());
      const ConditionedFlow flow = prop_x.empty() ? generate_propagate(stack, parse_vector(prop_y))
                                                  : classify_propagate(stack, BinaryState::parse(prop_x));
      ordered doc = flow_json(flow);
      doc["config_hash"] = session.meta.config_hash;
      doc["tool_version"] = session.meta.tool_version;
      session.emit(prop_out, doc.dump(2) + "\n");
    };
  });

  // couplings
  std::string cpl_model, cpl_direction = "classification", cpl_cond, cpl_basis = "complete", cpl_out;
  auto* cpl = app.add_subcommand("couplings", "Coupling flow along a conditioned propagation (CSV)");
  cpl->add_option("--model", cpl_model, "Model file")->required();
  cpl->add_option("--direction", cpl_direction, "classification | generation")->capture_default_str();
  cpl->add_option("--cond", cpl_cond, "Conditioning x or y")->required();
  cpl->add_option("--basis", cpl_basis, "complete | order:K | 0;1;0,1")->capture_default_str();
  cpl->add_option("--out", cpl_out, "CSV file (default stdout)");
  cpl->callback([&] {
    action = [&] {
      const RbmStack stack = load_model_file(cpl_model);
      const Direction d = parse_direction(cpl_direction);
      ordered s{{"model", cpl_model}, {"direction", to_string(d)}, {"cond", cpl_cond}, {"basis", cpl_basis}};
      session.resolve("couplings", s, stack.seed());
      const BasisPtr basis = make_basis(OperatorBasis::parse(cpl_basis, stack.dim()));
      const FlowTrace trace = flow_trace(stack, parse_vector(cpl_cond), d, basis);
      if (trace.approximate) err << "note: truncated basis, couplings are least-squares approximations\n";
      session.emit(cpl_out, flow_trace_csv(trace, meta_comment_line(session.meta)));
    };
  });

  // stability
  std::string stab_model, stab_direction = "generation", stab_cond, stab_basis = "complete", stab_out;
  double stab_fd = kDefaultFdStep, stab_tol = kDefaultTolEig;
  auto* stab = app.add_subcommand("stability", "Stability matrices and relevance along a flow (JSON)");
  stab->add_option("--model", stab_model, "Model file")->required();
  stab->add_option("--direction", stab_direction, "classification | generation")->capture_default_str();
  stab->add_option("--cond", stab_cond, "Conditioning x or y")->required();
  stab->add_option("--fd-step", stab_fd, "Central-difference step")->capture_default_str();
  stab->add_option("--tol-eig", stab_tol, "Relevance margin above 1")->capture_default_str();
  stab->add_option("--basis", stab_basis, "complete | order:K | 0;1;0,1")->capture_default_str();
  stab->add_option("--out", stab_out, "JSON file (default stdout)");
  stab->callback([&] {
    action = [&] {
      const RbmStack stack = load_model_file(stab_model);
      const Direction d = parse_direction(stab_direction);
      ordered s{{"model", stab_model}, {"direction", to_string(d)}, {"cond", stab_cond},
                {"fd_step", stab_fd},   {"tol_eig", stab_tol},        {"basis", stab_basis}};
      session.resolve("stability", s, stack.seed());
      const BasisPtr basis = make_basis(OperatorBasis::parse(stab_basis, stack.dim()));
      const FlowTrace trace = flow_trace(stack, parse_vector(stab_cond), d, basis);
      const RelevanceReport rep = relevance_report(stack, trace, stab_fd, stab_tol);
      session.emit(stab_out, relevance_report_json(rep, trace, &session.meta));
    };
  });

  // fim
  std::string fim_model, fim_y, fim_method = "chain", fim_out;
  double fim_fd = kDefaultFdStep;
  auto* fimc = app.add_subcommand("fim", "Fisher information of generation with respect to y (JSON)");
  fimc->add_option("--model", fim_model, "Model file")->required();
  fimc->add_option("--y", fim_y, "Output vector")->required();
  fimc->add_option("--method", fim_method, "chain | oracle | both")
      ->check(CLI::IsMember({"chain", "oracle", "both"}))
      ->capture_default_str();
  fimc->add_option("--fd-step", fim_fd, "Finite-difference step")->capture_default_str();
  fimc->add_option("--out", fim_out, "JSON file (default stdout)");
  fimc->callback([&] {
    action = [&] {
      const RbmStack stack = load_model_file(fim_model);
      ordered s{{"model", fim_model}, {"y", fim_y}, {"method", fim_method}, {"fd_step", fim_fd}};
      session.resolve("fim", s, stack.seed());
      const auto y = parse_vector(fim_y);
      if (fim_method != "both") {
        session.emit(fim_out, fim_json({fim(stack, y, parse_fim_method(fim_method), fim_fd)}, &session.meta));
        return;
      }
      const FimResult chain = fim(stack, y, FimMethod::kChainRule, fim_fd);
      const FimResult oracle = fim(stack, y, FimMethod::kScoreOracle, fim_fd);
      ordered doc = ordered::parse(fim_json({chain, oracle}, &session.meta));
      const double diff = frobenius(chain.matrix - oracle.matrix);
      const double scale = std::max(frobenius(chain.matrix), frobenius(oracle.matrix));
      doc["frobenius_difference"] = diff;
      doc["relative_frobenius_difference"] = scale > 0.0 ? diff / scale : 0.0;
      session.emit(fim_out, doc.dump(2) + "\n");
    };
  });

  // poison
  std::string poi_model, poi_task, poi_out, poi_report, poi_method = "chain";
  double poi_budget = kDefaultPoisonBudget;
  auto* poi = app.add_subcommand("poison", "Poison a labelled dataset along the strongest Fisher direction");
  poi->add_option("--model", poi_model, "Model file")->required();
  poi->add_option("--task", poi_task, "Clean dataset (binary labels)")->required();
  poi->add_option("--budget", poi_budget, "Max-norm of the perturbation, in [0, 0.5)")->capture_default_str();
  poi->add_option("--method", poi_method, "chain | oracle")->check(CLI::IsMember({"chain", "oracle"}))->capture_default_str();
  poi->add_option("--out", poi_out, "Poisoned dataset (JSONL)")->required();
  poi->add_option("--report", poi_report, "Report JSON (default <out>_report.json)");
  poi->callback([&] {
    action = [&] {
      const RbmStack stack = load_model_file(poi_model);
      const Dataset data = load_dataset_file(poi_task);
      ordered s{{"model", poi_model}, {"task", poi_task}, {"budget", poi_budget}, {"method", poi_method}};
      session.resolve("poison", s, stack.seed());
      const PoisonResult r = poison_dataset(stack, data, {poi_budget, parse_fim_method(poi_method), kDefaultFdStep});
      for (const auto& e : r.entries) {
        if (!e.poisoned && poi_budget > 0.0) err << "note: zero Fisher matrix, label passed through unpoisoned\n";
      }
      session.emit(poi_out, dataset_to_jsonl(r.dataset, &session.meta));
      session.emit(poi_report.empty() ? sibling(poi_out, "_report.json") : poi_report,
                   poison_report_json(r, &session.meta));
    };
  });

  // clone
  std::string cl_victim, cl_task, cl_seeds = "1,2,3,4,5", cl_config, cl_out, cl_csv;
  double cl_budget = kDefaultPoisonBudget;
  int cl_depth = 0;
  auto* cl = app.add_subcommand("clone", "Paired clean/poisoned cloning experiment");
  cl->add_option("--victim", cl_victim, "Victim model file")->required();
  cl->add_option("--task", cl_task, "Dataset whose inputs are queried and whose labels are the truth")->required();
  cl->add_option("--budget", cl_budget, "Poison budget (0 for identical conditions)")->capture_default_str();
  cl->add_option("--seeds", cl_seeds, "Comma-separated clone seeds")->capture_default_str();
  cl->add_option("--N", cl_depth, "Clone depth (0: victim's)")->capture_default_str();
  cl->add_option("--config", cl_config, "Trainer config (JSON)");
  cl->add_option("--out", cl_out, "Report JSON")->required();
  cl->add_option("--csv", cl_csv, "Summary CSV (default <out>_summary.csv)");
  cl->callback([&] {
    action = [&] {
      const RbmStack victim = load_model_file(cl_victim);
      const Dataset task = load_dataset_file(cl_task);
      AttackConfig config;
      config.depth = cl_depth;
      config.trainer = load_trainer_config(cl_config);
      config.poison.budget = cl_budget;
      config.seeds = parse_seeds(cl_seeds);
      ordered s{{"victim", cl_victim}, {"task", cl_task}, {"budget", cl_budget}, {"seeds", config.seeds},
                {"N", cl_depth}, {"trainer", ordered::parse(config.trainer.to_json())}};
      session.resolve("clone", s, config.seeds.front());
      const CloneReport r = attack_experiment(victim, task, config);
      if (!r.poisoning_available && cl_budget > 0.0) err << "note: poisoning unavailable, every Fisher matrix is zero\n";
      session.emit(cl_out, clone_report_json(r, &session.meta));
      session.emit(cl_csv.empty() ? sibling(cl_out, "_summary.csv") : cl_csv,
                   clone_summary_csv(r, meta_comment_line(session.meta)));
    };
  });

  // report
  std::string rep_bundle, rep_out;
  auto* rep = app.add_subcommand("report", "Summarize a bundle; refuses mixed provenance");
  rep->add_option("--bundle", rep_bundle, "Bundle directory")->required();
  rep->add_option("--out", rep_out, "Report JSON (default stdout)");
  rep->callback([&] {
    action = [&] {
      session.resolve("report", ordered{{"bundle", rep_bundle}}, 0);
      const std::string text = bundle_report(rep_bundle);
      if (rep_out.empty()) {
        out << text;
      } else {
        // Carries the bundle's own provenance.
        write_text_file(rep_out, text);
        session.written.emplace_back(rep_out);
        err << "wrote " << rep_out << '\n';
      }
    };
  });

  // run
  std::string run_config, run_out;
  auto* runc = app.add_subcommand("run", "Full pipeline from an experiment config into a bundle");
  runc->add_option("--config", run_config, "Experiment config (JSON)")->required();
  runc->add_option("--out", run_out, "Bundle directory (overrides output_dir)");
  runc->callback([&] {
    action = [&] {
      ExperimentConfig config = experiment_config_from_json(read_text_file(run_config));
      if (!run_out.empty()) config.output_dir = run_out;
      err << "rgshield run: config=" << config.canonical_json() << " seed=" << config.trainer.seed
          << " config_hash=" << config.hash() << '\n';
      const auto files = full_pipeline(config, [&](std::string_view stage) { err << "stage " << stage << '\n'; });
      for (const auto& f : files) session.written.push_back(config.output_dir / f);
      err << "wrote " << files.size() << " artifacts to " << config.output_dir.string() << '\n';
    };
  });

  const bool color = use_color(err);
  auto fail = [&](int code, const std::string& what) {
    err << (color ? "\033[31merror:\033[0m " : "error: ") << what << '\n';
    return code;
  };

  std::vector<const char*> argv{"rgshield"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fail(kExitUsage, e.what());
    err << app.help();
    return kExitUsage;
  }

  try {
    if (action) action();
    if (session.validate) {
      for (const auto& p : session.written) {
        validate_artifact(p);
        err << "validated " << p.string() << '\n';
      }
    }
  } catch (const CLI::ParseError& e) {
    return fail(kExitUsage, e.what());
  } catch (const SchemaError& e) {
    return fail(kExitUsage, std::string("SchemaError: ") + e.what());
  } catch (const StageError& e) {
    return fail(kExitDomain, std::string("StageError: ") + e.what());
  } catch (const NoUnstableDirectionError& e) {
    return fail(kExitDomain, std::string("NoUnstableDirectionError: ") + e.what());
  } catch (const TrainingDivergenceError& e) {
    return fail(kExitDomain, std::string("TrainingDivergenceError: ") + e.what());
  } catch (const IoError& e) {
    return fail(kExitDomain, std::string("IoError: ") + e.what());
  } catch (const MixedProvenanceError& e) {
    return fail(kExitDomain, std::string("MixedProvenanceError: ") + e.what());
  } catch (const Error& e) {
    return fail(kExitDomain, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitDomain, e.what());
  }
  return kExitOk;
}

}  // namespace rgshield::cli
