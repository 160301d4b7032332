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

#include <cstdint>
#include <string_view>

#include "rgshield/state.hpp"

namespace rgshield {

/// Toy labelled datasets over all 2^n inputs with uniform weights.
///   copy:    y = x
///   parity:  y = (XOR of x's bits, 0, ..., 0)
///   teacher: y = argmax decode of a seeded random two-layer stack
/// Throws std::invalid_argument for an unknown name.
Dataset make_task(std::string_view name, int n, std::uint64_t seed);

}  // namespace rgshield
