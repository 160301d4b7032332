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

#include "rgshield/model_io.hpp"

#include <sstream>

#include "json_schema.hpp"

namespace rgshield {

namespace {

using detail::json;

void write_reals(std::ostringstream& out, const double* data, Eigen::Index count) {
  out << '[';
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i) out << ", ";
    out << format_real(data[i]);
  }
  out << ']';
}

std::string quoted(const std::string& s) { return json(s).dump(); }

}  // namespace

std::string save_model(const RbmStack& stack, const ArtifactMeta* meta) {
  // Written by hand so every real gets format_real's 17 digits.
  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": " << kModelFormatVersion << ",\n";
  if (meta) {
    out << "  \"config_hash\": " << quoted(meta->config_hash) << ",\n";
    out << "  \"tool_version\": " << quoted(meta->tool_version) << ",\n";
  }
  out << "  \"n\": " << stack.dim() << ",\n";
  out << "  \"N\": " << stack.depth() << ",\n";
  out << "  \"seed\": " << stack.seed() << ",\n";
  const auto& tr = stack.training();
  out << "  \"training\": {\"objective_final\": " << format_real(tr.objective_final)
      << ", \"sweeps\": " << tr.sweeps << ", \"config_hash\": " << quoted(tr.config_hash)
      << "},\n";
  out << "  \"layers\": [\n";
  for (int k = 1; k <= stack.depth(); ++k) {
    const auto& layer = stack.layer(k);
    // Row-major W.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = layer.W;
    out << "    {\"W\": ";
    write_reals(out, w.data(), w.size());
    out << ", \"a\": ";
    write_reals(out, layer.a.data(), layer.a.size());
    out << ", \"b\": ";
    write_reals(out, layer.b.data(), layer.b.size());
    out << (k < stack.depth() ? "},\n" : "}\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

RbmStack load_model(std::string_view text, ArtifactMeta* meta) {
  using namespace detail;
  const json doc = parse_json(text, "$");
  reject_unknown(doc, {"format_version", "config_hash", "tool_version", "n", "N", "seed",
                       "training", "layers"},
                 "");
  const auto version = as_int(require(doc, "format_version", ""), "format_version");
  if (version != kModelFormatVersion) {
    throw VersionError("format_version", "unsupported model format version " +
                                             std::to_string(version) + " (expected " +
                                             std::to_string(kModelFormatVersion) + ")");
  }
  const auto n = as_int(require(doc, "n", ""), "n");
  const auto depth = as_int(require(doc, "N", ""), "N");
  if (n < 0 || n > kMaxStateBits) throw SchemaError("n", "dimension out of range");
  if (depth < 1) throw SchemaError("N", "depth must be >= 1");
  const auto seed = as_uint(require(doc, "seed", ""), "seed");

  const json& tr = require(doc, "training", "");
  reject_unknown(tr, {"objective_final", "sweeps", "config_hash"}, "training");
  TrainingProvenance provenance;
  provenance.objective_final =
      as_real(require(tr, "objective_final", "training"), "training.objective_final");
  provenance.sweeps = static_cast<int>(as_int(require(tr, "sweeps", "training"), "training.sweeps"));
  if (tr.contains("config_hash")) {
    provenance.config_hash = as_string(tr["config_hash"], "training.config_hash");
  }

  const json& layers = require(doc, "layers", "");
  if (!layers.is_array()) throw SchemaError("layers", "expected an array");
  if (static_cast<std::int64_t>(layers.size()) != depth) {
    throw SchemaError("layers", "expected N = " + std::to_string(depth) + " layers, found " +
                                    std::to_string(layers.size()));
  }
  const auto dim = static_cast<std::size_t>(n);
  std::vector<RbmLayer> parsed;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto path = index_path("layers", k);
    reject_unknown(layers[k], {"W", "a", "b"}, path);
    const auto w = as_real_array(require(layers[k], "W", path), path + ".W", dim * dim);
    const auto a = as_real_array(require(layers[k], "a", path), path + ".a", dim);
    const auto b = as_real_array(require(layers[k], "b", path), path + ".b", dim);
    RbmLayer layer;
    layer.W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    layer.a = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(n));
    layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(n));
    if (!layer.W.allFinite() || !layer.a.allFinite() || !layer.b.allFinite()) {
      throw SchemaError(path, "non-finite parameter");
    }
    parsed.push_back(std::move(layer));
  }
  if (meta) {
    meta->config_hash = doc.contains("config_hash") ? as_string(doc["config_hash"], "config_hash") : "";
    meta->tool_version =
        doc.contains("tool_version") ? as_string(doc["tool_version"], "tool_version") : "";
  }
  return RbmStack(static_cast<int>(n), std::move(parsed), seed, std::move(provenance));
}

RbmStack load_model_file(const std::filesystem::path& path, ArtifactMeta* meta) {
  return load_model(read_text_file(path), meta);
}

}  // namespace rgshield
