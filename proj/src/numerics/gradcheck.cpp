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

#include "hatemtl/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hatemtl::num {

namespace {

// Values only: no tape is needed for the probes.
double evaluate(const LossFn& loss) {
  Graph graph(false);
  return loss(graph)->value[0];
}

}  // namespace

double finite_diff_check(const LossFn& loss, std::span<const Var> params, double eps) {
  std::vector<std::vector<double>> saved;
  for (const auto& p : params) saved.push_back(p->grad);
  zero_grad(params);

  {
    Graph graph;
    graph.backward(loss(graph));
  }
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    for (std::size_t i = 0; i < value.numel(); ++i) {
      const double original = value[i];
      value[i] = original + eps;
      const double up = evaluate(loss);
      value[i] = original - eps;
      const double down = evaluate(loss);
      value[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double ad = analytic[k][i];
      const double rel = std::abs(ad - numeric) / std::max(1e-8, std::abs(ad) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = saved[k];
  return worst;
}

}  // namespace hatemtl::num
