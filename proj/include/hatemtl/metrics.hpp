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

#include <cstddef>
#include <span>
#include <vector>

namespace hatemtl::eval {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<ClassScores> per_class;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  // confusion[gold][predicted]
  std::vector<std::vector<std::size_t>> confusion;
};

/// Per-class precision/recall/F1 with 0 for every 0/0 ratio, plus macro
/// (unweighted mean), micro (pooled counts) and support-weighted F1.
EvalReport classification_report(std::span<const int> gold, std::span<const int> predicted,
                                  std::size_t num_classes);

}  // namespace hatemtl::eval
