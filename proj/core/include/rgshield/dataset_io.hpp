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
#include "rgshield/state.hpp"

namespace rgshield {

/// One JSON object per line: {"x": [0/1...], "y": [real...], "w": real}.
/// Lines starting with '#' are comments; the first may carry ArtifactMeta.
std::string dataset_to_jsonl(const Dataset& data, const ArtifactMeta* meta = nullptr);

/// Weights must sum to 1 within 1e-9; they are renormalized if the sum is off
/// by more than 1e-12.
Dataset dataset_from_jsonl(std::string_view text, ArtifactMeta* meta = nullptr);

Dataset load_dataset_file(const std::filesystem::path& path, ArtifactMeta* meta = nullptr);

}  // namespace rgshield
