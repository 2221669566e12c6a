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

#include <functional>
#include <span>

#include "hatemtl/numerics/graph.hpp"

namespace hatemtl::num {

using LossFn = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients of `loss` against central differences for
/// every coordinate of every parameter. Returns
/// max |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
///
/// Parameter values and gradients are left as they were on entry.
double finite_diff_check(const LossFn& loss, std::span<const Var> params, double eps = 1e-5);

}  // namespace hatemtl::num
