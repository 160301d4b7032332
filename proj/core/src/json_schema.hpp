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

#pragma once

// Strict accessors over nlohmann::json that report failures as SchemaError
// with the JSON path of the offending field.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rgshield/errors.hpp"

namespace rgshield::detail {

using json = nlohmann::json;

inline std::string join_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

inline json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what, std::string("malformed JSON: ") + e.what());
  }
}

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected an object");
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& path) {
  expect_object(obj, path);
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw SchemaError(join_path(path, key), "unknown field");
  }
}

inline const json& require(const json& obj, std::string_view key, const std::string& path) {
  expect_object(obj, path);
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw SchemaError(join_path(path, key), "missing field");
  return *it;
}

inline double as_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

inline std::int64_t as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t as_uint(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw SchemaError(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> as_real_array(const json& j, const std::string& path,
                                         std::size_t expected_size) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  if (j.size() != expected_size) {
    throw SchemaError(path, "expected " + std::to_string(expected_size) + " entries, found " +
                                std::to_string(j.size()));
  }
  std::vector<double> out;
  out.reserve(expected_size);
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_real(j[i], index_path(path, i)));
  return out;
}

}  // namespace rgshield::detail
