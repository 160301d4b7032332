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

#include "rgshield/dataset_io.hpp"

#include <cmath>
#include <sstream>

#include "json_schema.hpp"

namespace rgshield {

std::string dataset_to_jsonl(const Dataset& data, const ArtifactMeta* meta) {
  std::ostringstream out;
  if (meta) out << meta_comment_line(*meta) << '\n';
  for (const auto& p : data.pairs()) {
    out << "{\"x\": [";
    for (int i = 0; i < p.x.size(); ++i) out << (i ? ", " : "") << int{p.x[i]};
    out << "], \"y\": [";
    for (int i = 0; i < p.y.size(); ++i) out << (i ? ", " : "") << format_real(p.y[i]);
    out << "], \"w\": " << format_real(p.weight) << "}\n";
  }
  return out.str();
}

Dataset dataset_from_jsonl(std::string_view text, ArtifactMeta* meta) {
  using namespace detail;
  std::vector<LabeledExample> pairs;
  int n = -1;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    if (line.front() == '#') {
      if (meta) parse_meta_comment_line(line, *meta);
      continue;
    }
    const auto path = "line " + std::to_string(line_no);
    const json rec = parse_json(line, path);
    reject_unknown(rec, {"x", "y", "w"}, path);
    const json& xs = require(rec, "x", path);
    if (!xs.is_array()) throw SchemaError(path + ".x", "expected an array");
    if (n < 0) n = static_cast<int>(xs.size());
    std::vector<std::uint8_t> bits;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto v = as_int(xs[i], index_path(path + ".x", i));
      if (v != 0 && v != 1) throw SchemaError(index_path(path + ".x", i), "expected 0 or 1");
      bits.push_back(static_cast<std::uint8_t>(v));
    }
    if (static_cast<int>(bits.size()) != n) throw SchemaError(path + ".x", "dimension mismatch");
    auto ys = as_real_array(require(rec, "y", path), path + ".y", static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!(ys[i] >= 0.0 && ys[i] <= 1.0)) {
        throw SchemaError(index_path(path + ".y", i), "output component outside [0,1]");
      }
    }
    const double w = as_real(require(rec, "w", path), path + ".w");
    if (!(w >= 0.0) || !std::isfinite(w)) throw SchemaError(path + ".w", "negative weight");
    pairs.push_back({BinaryState(std::move(bits)), OutputVector(std::move(ys)), w});
  }
  if (pairs.empty()) throw SchemaError("$", "dataset has no records");
  double total = 0.0;
  for (const auto& p : pairs) total += p.weight;
  if (std::abs(total - 1.0) > 1e-9) {
    throw SchemaError("w", "weights sum to " + format_real(total) + ", expected 1 within 1e-9");
  }
  if (std::abs(total - 1.0) > 1e-12) {
    for (auto& p : pairs) p.weight /= total;
  }
  return Dataset(n, std::move(pairs));
}

Dataset load_dataset_file(const std::filesystem::path& path, ArtifactMeta* meta) {
  return dataset_from_jsonl(read_text_file(path), meta);
}

}  // namespace rgshield
