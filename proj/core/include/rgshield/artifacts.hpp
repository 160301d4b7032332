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

#include <filesystem>
#include <string>
#include <string_view>

namespace rgshield {

inline constexpr std::string_view kToolVersion = "0.1.0";

// 17 significant digits, always with a '.' or exponent so the text reads
// back as a floating-point literal (keeps -0.0). strtod round-trips it.
std::string format_real(double value);

// 64-bit FNV-1a, lowercase hex (16 chars).
std::string fnv1a_hex(std::string_view data);

/// Provenance stamped into every artifact of a run.
struct ArtifactMeta {
  std::string config_hash;
  std::string tool_version = std::string(kToolVersion);
};

// "# config_hash=<h> tool_version=<v>" for CSV and JSONL artifacts.
std::string meta_comment_line(const ArtifactMeta& meta);
// Parses a line produced by meta_comment_line; returns false otherwise.
bool parse_meta_comment_line(std::string_view line, ArtifactMeta& out);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace rgshield
