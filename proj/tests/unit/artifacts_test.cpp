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

#include <cstdlib>

#include <gtest/gtest.h>

#include "rgshield/artifacts.hpp"

namespace rgshield {
namespace {

TEST(FormatReal, RoundTripsAndReadsAsReal) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1e-300, -2.5e17, 3.141592653589793}) {
    const auto text = format_real(v);
    EXPECT_EQ(std::strtod(text.c_str(), nullptr), v) << text;
    EXPECT_NE(text.find_first_of(".eE"), std::string::npos) << text;
  }
  EXPECT_EQ(format_real(-0.0), "-0.0");
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(MetaCommentLine, RoundTrip) {
  const ArtifactMeta meta{"0123456789abcdef", "0.1.0"};
  const auto line = meta_comment_line(meta);
  EXPECT_EQ(line, "# config_hash=0123456789abcdef tool_version=0.1.0");
  ArtifactMeta back;
  ASSERT_TRUE(parse_meta_comment_line(line, back));
  EXPECT_EQ(back.config_hash, meta.config_hash);
  EXPECT_EQ(back.tool_version, meta.tool_version);
  EXPECT_FALSE(parse_meta_comment_line("# something else", back));
}

}  // namespace
}  // namespace rgshield
