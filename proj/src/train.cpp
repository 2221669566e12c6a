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

#include "hatemtl/train.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "hatemtl/error.hpp"
#include "hatemtl/metrics.hpp"
#include "hatemtl/seeding.hpp"

namespace hatemtl::train {

using nlohmann::json;
using num::Graph;
using num::Var;

model::HeadSpec TaskData::head_spec() const {
  model::HeadSpec spec;
  spec.name = name;
  for (const auto& c : classes) {
    spec.class_names.push_back(c.name);
    spec.harmful.push_back(c.harmful);
  }
  return spec;
}

std::vector<Example> encode_examples(const std::string& dataset, std::span<const data::Instance> instances,
                                     const tok::Vocabulary& vocab, std::size_t max_len) {
  std::vector<Example> out;
  out.reserve(instances.size());
  for (const auto& inst : instances)
    out.push_back(Example{tok::encode(vocab, inst.text, max_len), inst.label, {dataset, inst.row}});
  return out;
}

TaskData encode_task(const data::SplitBundle& bundle, const tok::Vocabulary& vocab, std::size_t max_len) {
  return TaskData{bundle.name, bundle.classes, encode_examples(bundle.name, bundle.train, vocab, max_len),
                  encode_examples(bundle.name, bundle.validation, vocab, max_len),
                  encode_examples(bundle.name, bundle.test, vocab, max_len)};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (head_hidden < 1) throw ConfigError("head hidden size must be at least 1");
}

json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"seed", seed},
          {"head_hidden", head_hidden},
          {"step_mode", step_mode == StepMode::Interleaved ? "interleaved" : "per_epoch"},
          {"vocab_max_size", vocab_max_size},
          {"vocab_min_freq", vocab_min_freq},
          {"encoder",
           {{"variant", encoder.variant == model::EncoderVariant::MiniTransformer ? "mini_transformer" : "mean_pool"},
            {"d_model", encoder.d_model},
            {"n_layers", encoder.n_layers},
            {"n_heads", encoder.n_heads},
            {"ff_dim", encoder.ff_dim},
            {"max_len", encoder.max_len}}}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.seed = j.value("seed", c.seed);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    c.vocab_max_size = j.value("vocab_max_size", c.vocab_max_size);
    c.vocab_min_freq = j.value("vocab_min_freq", c.vocab_min_freq);
    const auto mode = j.value("step_mode", std::string("interleaved"));
    if (mode == "interleaved") c.step_mode = StepMode::Interleaved;
    else if (mode == "per_epoch") c.step_mode = StepMode::PerEpoch;
    else throw ConfigError("unknown step_mode '" + mode + "'");
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      const auto variant = e.value("variant", std::string("mini_transformer"));
      if (variant == "mini_transformer") c.encoder.variant = model::EncoderVariant::MiniTransformer;
      else if (variant == "mean_pool") c.encoder.variant = model::EncoderVariant::MeanPool;
      else throw ConfigError("unknown encoder variant '" + variant + "'");
      c.encoder.d_model = e.value("d_model", c.encoder.d_model);
      c.encoder.n_layers = e.value("n_layers", c.encoder.n_layers);
      c.encoder.n_heads = e.value("n_heads", c.encoder.n_heads);
      c.encoder.ff_dim = e.value("ff_dim", c.encoder.ff_dim);
      c.encoder.max_len = e.value("max_len", c.encoder.max_len);
      c.encoder.vocab_size = e.value("vocab_size", c.encoder.vocab_size);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<int> predict_head(const model::MtlModel& m, std::size_t head, std::span<const Example> examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto probs = model::head_probabilities(m.heads[head].params, model::embed(m, ex.seq));
    out.push_back(static_cast<int>(model::argmax(probs)));
  }
  return out;
}

namespace {

// Shuffled index stream over one task's training split; wraps with a
// reshuffle when exhausted.
class BatchCursor {
 public:
  BatchCursor(std::size_t size, std::mt19937_64& rng) : order_(size), rng_(&rng) {
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), *rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> take(std::size_t n) {
    std::vector<std::size_t> out;
    out.reserve(n);
    while (out.size() < n) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

  std::size_t remaining() const { return order_.size() - pos_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::mt19937_64* rng_;
};

double validation_macro_f1(const model::MtlModel& m, std::size_t head, const TaskData& task) {
  std::vector<int> gold;
  for (const auto& ex : task.validation) gold.push_back(ex.label);
  const auto pred = predict_head(m, head, task.validation);
  return eval::classification_report(gold, pred, task.classes.size()).macro_f1;
}

}  // namespace

TrainedArtifact train_mtl(std::span<const TaskData> tasks, const TrainConfig& config) {
  config.validate();
  if (tasks.empty()) throw ConfigError("train_mtl: at least one dataset is required");
  std::vector<model::HeadSpec> specs;
  std::size_t largest = 0;
  for (const auto& t : tasks) {
    if (t.train.empty()) throw ConfigError("train_mtl: dataset '" + t.name + "' has an empty training split");
    largest = std::max(largest, t.train.size());
    specs.push_back(t.head_spec());
  }

  TrainedArtifact art;
  art.model = model::init_model(config.encoder, specs, config.head_hidden, config.seed);
  num::Adam adam(art.model.all_parameters(), config.adam);
  std::mt19937_64 rng(derive_seed(config.seed, 1));
  const std::size_t B = config.batch_size;
  const std::size_t steps_per_epoch = (largest + B - 1) / B;

  std::vector<BatchCursor> cursors;
  for (const auto& t : tasks) cursors.emplace_back(t.train.size(), rng);

  double best_score = -1.0;
  std::vector<num::Tensor> best;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (epoch > 1)
      for (auto& c : cursors) c.reshuffle();
    EpochRecord record;
    record.epoch = epoch;
    record.losses.assign(tasks.size(), 0.0);

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      Graph g;
      std::vector<Var> head_losses;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        const std::size_t n = task.train.size() == largest ? std::min(B, cursors[i].remaining())
                                                           : std::min(B, task.train.size());
        std::vector<Var> terms;
        for (std::size_t idx : cursors[i].take(n)) {
          const auto& ex = task.train[idx];
          auto probs = model::head_forward(g, art.model.heads[i].params, model::encode_pool(g, art.model, ex.seq));
          terms.push_back(g.cross_entropy(probs, static_cast<std::size_t>(ex.label)));
          art.seen.insert(ex.id);
        }
        head_losses.push_back(g.scale(g.sum(terms), 1.0 / static_cast<double>(terms.size())));
      }
      Var total = g.sum(head_losses);
      for (std::size_t i = 0; i < tasks.size(); ++i) record.losses[i] += head_losses[i]->value[0];
      if (config.record_steps) {
        StepRecord s{epoch, step, {}, total->value[0]};
        for (const auto& l : head_losses) s.head_losses.push_back(l->value[0]);
        art.steps.push_back(std::move(s));
      }
      g.backward(total);
      if (config.step_mode == StepMode::Interleaved) adam.step();
    }
    if (config.step_mode == StepMode::PerEpoch) adam.step();

    for (auto& l : record.losses) l /= static_cast<double>(steps_per_epoch);
    record.total_loss = std::accumulate(record.losses.begin(), record.losses.end(), 0.0);
    for (std::size_t i = 0; i < tasks.size(); ++i)
      record.validation_macro_f1.push_back(validation_macro_f1(art.model, i, tasks[i]));
    record.selection_score = std::accumulate(record.validation_macro_f1.begin(), record.validation_macro_f1.end(), 0.0) /
                             static_cast<double>(tasks.size());
    if (record.selection_score > best_score) {
      best_score = record.selection_score;
      best = art.model.snapshot();
      art.best_epoch = epoch;
    }
    art.history.push_back(std::move(record));
  }
  art.model.restore(best);
  return art;
}

TrainedArtifact train_single(const TaskData& task, const TrainConfig& config) {
  return train_mtl(std::span<const TaskData>(&task, 1), config);
}

NchResult train_nch_head(const model::MtlModel& frozen, std::span<const TaskData> tasks, const TrainConfig& config) {
  config.validate();
  struct Row {
    std::vector<double> embedding;
    int label;
  };
  std::vector<Row> train_rows, val_rows;
  for (const auto& task : tasks) {
    const auto add = [&](std::vector<Row>& rows, std::span<const Example> examples) {
      for (const auto& ex : examples)
        rows.push_back({model::embed(frozen, ex.seq), static_cast<int>(data::binarize(task.classes, ex.label))});
    };
    add(train_rows, task.train);
    add(val_rows, task.validation);
    add(val_rows, task.test);
  }
  if (train_rows.empty()) throw ConfigError("train_nch_head: no training instances");

  NchResult result;
  result.head = model::init_head(frozen.config.d_model, config.head_hidden, 2, derive_seed(config.seed, 2));
  const auto params = result.head.parameters();
  num::Adam adam(params, config.adam);
  std::mt19937_64 rng(derive_seed(config.seed, 3));
  std::vector<std::size_t> order(train_rows.size());
  std::iota(order.begin(), order.end(), 0);

  const auto to_var = [](const std::vector<double>& e) {
    return num::constant(num::Tensor({1, e.size()}, e));
  };

  double best_score = -1.0;
  std::vector<num::Tensor> best;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record;
    record.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Graph g;
      std::vector<Var> terms;
      for (std::size_t k = start; k < end; ++k) {
        const auto& row = train_rows[order[k]];
        terms.push_back(g.cross_entropy(model::head_forward(g, result.head, to_var(row.embedding)),
                                        static_cast<std::size_t>(row.label)));
      }
      Var loss = g.scale(g.sum(terms), 1.0 / static_cast<double>(terms.size()));
      loss_sum += loss->value[0];
      ++batches;
      g.backward(loss);
      adam.step();
    }
    record.losses = {loss_sum / static_cast<double>(batches)};
    record.total_loss = record.losses[0];

    std::vector<int> gold, pred;
    for (const auto& row : val_rows) {
      gold.push_back(row.label);
      pred.push_back(static_cast<int>(model::argmax(model::head_probabilities(result.head, row.embedding))));
    }
    record.validation_macro_f1 = {eval::classification_report(gold, pred, 2).macro_f1};
    record.selection_score = record.validation_macro_f1[0];
    if (record.selection_score > best_score) {
      best_score = record.selection_score;
      best.clear();
      for (const auto& p : params) best.push_back(p->value);
      result.best_epoch = epoch;
    }
    result.history.push_back(std::move(record));
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return result;
}

void write_history_csv(std::ostream& out, std::span<const std::string> head_names,
                       std::span<const EpochRecord> history) {
  out << "epoch";
  for (const auto& n : head_names) out << ",loss_" << n;
  out << ",total_loss";
  for (const auto& n : head_names) out << ",val_macro_f1_" << n;
  out << ",mean_val_macro_f1\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.epoch;
    for (double l : r.losses) out << ',' << l;
    out << ',' << r.total_loss;
    for (double f : r.validation_macro_f1) out << ',' << f;
    out << ',' << r.selection_score << '\n';
  }
}

}  // namespace hatemtl::train
