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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hatemtl/model.hpp"
#include "hatemtl/numerics/gradcheck.hpp"

namespace hatemtl::testing {

/// A scalar loss over some leaves, ready for finite_diff_check.
struct GradCase {
  num::LossFn loss;
  std::vector<num::Var> params;
  // Keeps a model alive when the case is built from one.
  std::shared_ptr<model::MtlModel> owner;
};

struct PrimitiveCase {
  std::string name;
  std::function<GradCase(std::uint64_t seed)> make;
};

/// One case per differentiable primitive, operands of random 2..8 sized
/// dimensions, reduced to a scalar by a fixed random weighting.
const std::vector<PrimitiveCase>& primitive_cases();

/// Summed per-head mean cross-entropy of a tiny two-head model on a batch of
/// four random sequences.
GradCase full_model_case(std::uint64_t seed, model::EncoderVariant variant = model::EncoderVariant::MiniTransformer);

/// True when central differences with step `eps` are trustworthy at the
/// case's current parameters: no kink between the probes of any coordinate and
/// no nonzero slope small enough to drown in rounding. Uses loss values only.
bool fd_well_conditioned(const GradCase& c, double eps = 1e-5);

/// full_model_case for `seed`, redrawn from a derived seed until
/// fd_well_conditioned holds (at most 50 draws). `attempts` receives the count.
GradCase conditioned_full_model_case(std::uint64_t seed,
                                     model::EncoderVariant variant = model::EncoderVariant::MiniTransformer,
                                     std::size_t* attempts = nullptr);

}  // namespace hatemtl::testing
