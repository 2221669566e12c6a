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

#include "hatemtl/metrics.hpp"

#include <string>

#include "hatemtl/error.hpp"

namespace hatemtl::eval {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

EvalReport classification_report(std::span<const int> gold, std::span<const int> predicted,
                                  std::size_t num_classes) {
  if (gold.size() != predicted.size()) {
    throw ContractViolation("classification_report: " + std::to_string(gold.size()) + " gold labels vs " +
                            std::to_string(predicted.size()) + " predictions");
  }
  EvalReport report;
  report.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(gold[i]) >= num_classes ||
        static_cast<std::size_t>(predicted[i]) >= num_classes) {
      throw ContractViolation("classification_report: label out of range at position " + std::to_string(i));
    }
    ++report.confusion[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(predicted[i])];
  }

  double tp_total = 0.0, fp_total = 0.0, fn_total = 0.0;
  const double n = static_cast<double>(gold.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    double tp = static_cast<double>(report.confusion[c][c]);
    double fp = 0.0, fn = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (k == c) continue;
      fp += static_cast<double>(report.confusion[k][c]);
      fn += static_cast<double>(report.confusion[c][k]);
    }
    ClassScores s;
    s.support = report.confusion[c][c] + static_cast<std::size_t>(fn);
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    s.f1 = harmonic(s.precision, s.recall);
    report.per_class.push_back(s);
    tp_total += tp;
    fp_total += fp;
    fn_total += fn;
    report.macro_f1 += s.f1;
    report.weighted_f1 += s.f1 * static_cast<double>(s.support);
  }
  if (num_classes > 0) report.macro_f1 /= static_cast<double>(num_classes);
  report.weighted_f1 = ratio(report.weighted_f1, n);
  report.micro_f1 = harmonic(ratio(tp_total, tp_total + fp_total), ratio(tp_total, tp_total + fn_total));
  report.accuracy = ratio(tp_total, n);
  return report;
}

}  // namespace hatemtl::eval
