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
#include <string>
#include <string_view>

namespace hatemtl::timeutil {

using Instant = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM[:SS][.fff][Z|+HH:MM|-HH:MM]"
/// or a decimal count of epoch seconds. Throws LoadError otherwise.
Instant parse(std::string_view text);

std::string format_iso(Instant t);
std::string format_date(std::chrono::sys_days d);

}  // namespace hatemtl::timeutil
