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

#include "rgshield/artifacts.hpp"
#include "rgshield/rbm.hpp"

namespace rgshield {

inline constexpr int kModelFormatVersion = 1;

/// JSON model document:
///   {format_version, n, N, seed, training: {objective_final, sweeps,
///    config_hash}, layers: [{W: row-major n·n, a, b}], config_hash?,
///    tool_version?}
/// Reals are written with 17 significant digits, so save/load is bit-exact.
std::string save_model(const RbmStack& stack, const ArtifactMeta* meta = nullptr);

/// Throws SchemaError (field path in the message) on malformed input and
/// VersionError on a format_version other than kModelFormatVersion.
RbmStack load_model(std::string_view text, ArtifactMeta* meta = nullptr);

RbmStack load_model_file(const std::filesystem::path& path, ArtifactMeta* meta = nullptr);

}  // namespace rgshield
