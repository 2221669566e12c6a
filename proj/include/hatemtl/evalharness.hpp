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
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hatemtl/data.hpp"
#include "hatemtl/metrics.hpp"
#include "hatemtl/model.hpp"
#include "hatemtl/train.hpp"
#include "json.hpp"

namespace hatemtl::eval {

/// Each head votes with its own binarized argmax; exact ties go to HARMFUL.
data::BinaryLabel predict_mv(const model::MtlModel& model, const tok::TokenSequence& seq);
data::BinaryLabel predict_mv_embedding(const model::MtlModel& model, std::span<const double> embedding);

/// Argmax of the binary NCH head over the frozen pooled embedding
/// (lowest index wins ties, i.e. HARMLESS).
data::BinaryLabel predict_nch(const model::MtlModel& model, const model::HeadParams& head,
                              const tok::TokenSequence& seq);

enum class Scheme { Nch, Mv };
std::string to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

struct ExperimentOptions {
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  data::SplitRatios ratios;
  bool oversample = true;
  // Unseen targets are scored on all of their instances unless set.
  bool target_test_only = false;
  // Restricts leave-one-out to these targets; empty means every dataset.
  std::vector<std::string> targets;
  std::size_t workers = 0;  // 0: default_workers()
};

/// Everything one training run needs, derived from raw datasets for a seed:
/// split + oversampled bundles, a vocabulary built from their training
/// splits only, and the encoded tasks.
struct PreparedRun {
  std::vector<data::SplitBundle> bundles;
  tok::Vocabulary vocab;
  std::vector<train::TaskData> tasks;
  train::TrainConfig config;  // encoder.vocab_size and seed filled in
  // Every instance that fed vocabulary building, training or selection.
  std::set<data::InstanceId> material;
};

PreparedRun prepare_run(std::span<const data::LabeledDataset* const> datasets, const train::TrainConfig& config,
                        const ExperimentOptions& options, std::uint64_t run_seed);

struct RunScore {
  std::uint64_t seed = 0;
  EvalReport report;
  std::size_t id_overlap = 0;  // |training material ∩ target ids|
};

struct FoldResult {
  std::string target;
  Scheme scheme = Scheme::Nch;
  std::vector<RunScore> runs;
  double mean_macro_f1 = 0.0;
  double mean_micro_f1 = 0.0;
  double mean_weighted_f1 = 0.0;
  // Macro-F1 of always predicting the target's majority binary class.
  double majority_baseline_macro_f1 = 0.0;
  bool isolated = true;
};

/// For every target: train MTL on the remaining datasets, build each
/// requested scheme's predictor, score the binarized target. Results are
/// sorted by (target, scheme).
std::vector<FoldResult> leave_one_out(std::span<const data::LabeledDataset> datasets, std::span<const Scheme> schemes,
                                      const train::TrainConfig& config, const ExperimentOptions& options);

struct TransferMatrix {
  std::vector<std::string> names;
  std::size_t runs = 0;
  // cells[source][target]: mean binarized macro-F1; NaN on the diagonal.
  std::vector<std::vector<double>> cells;
  std::vector<std::vector<std::vector<double>>> per_run;
  std::vector<std::uint64_t> seeds;
  // Mean binarized macro-F1 of each source model on its own test split.
  std::vector<double> in_domain;
};

TransferMatrix pairwise_matrix(std::span<const data::LabeledDataset> datasets, const train::TrainConfig& config,
                               const ExperimentOptions& options);

struct CurvePoint {
  std::string target;
  std::size_t i = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> samples;
  std::vector<std::vector<std::string>> sampled_sets;
  std::vector<std::uint64_t> seeds;
};

struct CurveOptions {
  std::size_t iterations = 10;
  bool vary_training_seed = true;
};

/// Target test macro-F1 (native classes) when jointly trained with i datasets
/// sampled without replacement from the pool, for i = 0..max_i.
std::vector<CurvePoint> diminishing_returns(const data::LabeledDataset& target,
                                            std::span<const data::LabeledDataset> pool, std::size_t max_i,
                                            const train::TrainConfig& config, const ExperimentOptions& options,
                                            const CurveOptions& curve = {});

void write_loo_csv(std::ostream& out, std::span<const FoldResult> folds);
void write_matrix_csv(std::ostream& out, const TransferMatrix& matrix);
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points);
nlohmann::json loo_summary(std::span<const FoldResult> folds);
nlohmann::json matrix_summary(const TransferMatrix& matrix);
nlohmann::json curve_summary(std::span<const CurvePoint> points);

}  // namespace hatemtl::eval
