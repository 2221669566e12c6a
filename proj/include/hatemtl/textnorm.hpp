// Copyright 2026 The hatemtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace hatemtl::text {

/// One post as it arrives from a platform export.
struct RawPost {
  std::string text;
  std::optional<std::chrono::sys_seconds> timestamp;
  std::optional<std::string> author;
};

/// Standardizes a post for the encoder: lowercases, then drops URLs, emoji
/// and a leading retweet marker, collapses runs of one punctuation
/// character, and re-spaces so words and punctuation are separated by
/// exactly one space. Returns nullopt when nothing is left.
std::optional<std::string> normalize(std::string_view text);

// Exposed for property tests.
bool is_emoji(char32_t cp);
bool is_punctuation(char32_t cp);

}  // namespace hatemtl::text
