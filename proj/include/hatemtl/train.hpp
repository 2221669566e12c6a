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
#include "hatemtl/model.hpp"
#include "hatemtl/numerics/adam.hpp"
#include "hatemtl/tokenizer.hpp"
#include "json.hpp"

namespace hatemtl::train {

struct Example {
  tok::TokenSequence seq;
  int label = 0;
  data::InstanceId id;
};

/// A split dataset after tokenization: what the trainer consumes.
struct TaskData {
  std::string name;
  std::vector<data::ClassDef> classes;
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;

  model::HeadSpec head_spec() const;
};

std::vector<Example> encode_examples(const std::string& dataset, std::span<const data::Instance> instances,
                                     const tok::Vocabulary& vocab, std::size_t max_len);
TaskData encode_task(const data::SplitBundle& bundle, const tok::Vocabulary& vocab, std::size_t max_len);

enum class StepMode {
  Interleaved,  // one summed-loss Adam step per multi-head minibatch round
  PerEpoch,     // gradients accumulated over the epoch, one Adam step at its end
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 512;
  num::AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t head_hidden = 64;
  model::EncoderConfig encoder;
  StepMode step_mode = StepMode::Interleaved;
  bool record_steps = false;
  // Vocabulary construction for experiments built on this config.
  std::size_t vocab_max_size = 20000;
  std::size_t vocab_min_freq = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<double> head_losses;
  double total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::vector<double> losses;  // per head, mean batch loss over the epoch
  double total_loss = 0.0;
  std::vector<double> validation_macro_f1;
  double selection_score = 0.0;
};

struct TrainedArtifact {
  model::MtlModel model;  // best-epoch snapshot
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::vector<StepRecord> steps;  // only when config.record_steps
  std::set<data::InstanceId> seen;  // every instance drawn into a training batch
};

/// Joint training of a shared encoder with one head per task. Each step
/// draws one minibatch per task (smaller tasks cycle with reshuffling),
/// sums the per-head mean cross-entropies and takes one Adam step; an epoch
/// ends when the largest training split is exhausted. The epoch with the
/// highest mean validation macro-F1 is kept (earliest on ties).
TrainedArtifact train_mtl(std::span<const TaskData> tasks, const TrainConfig& config);

TrainedArtifact train_single(const TaskData& task, const TrainConfig& config);

struct NchResult {
  model::HeadParams head;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Fits a fresh binary head on frozen pooled embeddings: training data is
/// every task's binarized train split, validation is every task's binarized
/// validation and test splits.
NchResult train_nch_head(const model::MtlModel& frozen, std::span<const TaskData> tasks, const TrainConfig& config);

/// Per-head argmax predictions in the head's native label space.
std::vector<int> predict_head(const model::MtlModel& model, std::size_t head, std::span<const Example> examples);

void write_history_csv(std::ostream& out, std::span<const std::string> head_names, std::span<const EpochRecord> history);

}  // namespace hatemtl::train
