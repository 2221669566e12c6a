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

#include "hatemtl/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "hatemtl/csv.hpp"
#include "hatemtl/error.hpp"
#include "hatemtl/parallel.hpp"
#include "hatemtl/seeding.hpp"

namespace hatemtl::eval {

using data::BinaryLabel;
using nlohmann::json;

data::BinaryLabel predict_mv_embedding(const model::MtlModel& m, std::span<const double> embedding) {
  if (m.heads.empty()) throw ContractViolation("predict_mv: model has no heads");
  std::size_t harmful = 0;
  for (const auto& head : m.heads) {
    const auto cls = model::argmax(model::head_probabilities(head.params, embedding));
    if (head.spec.harmful.at(cls)) ++harmful;
  }
  return 2 * harmful >= m.heads.size() ? BinaryLabel::Harmful : BinaryLabel::Harmless;
}

data::BinaryLabel predict_mv(const model::MtlModel& m, const tok::TokenSequence& seq) {
  return predict_mv_embedding(m, model::embed(m, seq));
}

data::BinaryLabel predict_nch(const model::MtlModel& m, const model::HeadParams& head, const tok::TokenSequence& seq) {
  const auto probs = model::head_probabilities(head, model::embed(m, seq));
  return model::argmax(probs) == 1 ? BinaryLabel::Harmful : BinaryLabel::Harmless;
}

std::string to_string(Scheme s) { return s == Scheme::Nch ? "nch" : "mv"; }

Scheme parse_scheme(std::string_view s) {
  if (s == "nch" || s == "NCH") return Scheme::Nch;
  if (s == "mv" || s == "MV") return Scheme::Mv;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

PreparedRun prepare_run(std::span<const data::LabeledDataset* const> datasets, const train::TrainConfig& config,
                        const ExperimentOptions& options, std::uint64_t run_seed) {
  PreparedRun run;
  std::vector<std::string> corpus;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const auto& ds = *datasets[k];
    auto bundle = data::stratified_split(ds, options.ratios, derive_seed(run_seed, 100 + k));
    for (const auto* part : {&bundle.train, &bundle.validation, &bundle.test})
      for (const auto& inst : *part) run.material.insert({ds.name, inst.row});
    for (const auto& inst : bundle.train) corpus.push_back(inst.text);
    if (options.oversample)
      bundle.train = data::oversample(bundle.train, bundle.classes.size(), derive_seed(run_seed, 200 + k));
    run.bundles.push_back(std::move(bundle));
  }
  run.config = config;
  run.vocab = tok::build_vocab(corpus, config.vocab_max_size, config.vocab_min_freq);
  run.config.encoder.vocab_size = run.vocab.size();
  run.config.seed = run_seed;
  for (const auto& b : run.bundles) run.tasks.push_back(train::encode_task(b, run.vocab, config.encoder.max_len));
  return run;
}

namespace {

std::size_t resolve_workers(const ExperimentOptions& options) {
  return options.workers ? options.workers : default_workers();
}

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double majority_baseline(std::span<const int> gold) {
  const auto ones = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), 1));
  const int majority = 2 * ones > gold.size() ? 1 : 0;
  const std::vector<int> constant(gold.size(), majority);
  return classification_report(gold, constant, 2).macro_f1;
}

std::string join_seeds(std::span<const std::uint64_t> seeds) {
  std::ostringstream out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? ";" : "") << seeds[i];
  return out.str();
}

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

std::vector<FoldResult> leave_one_out(std::span<const data::LabeledDataset> datasets, std::span<const Scheme> schemes,
                                      const train::TrainConfig& config, const ExperimentOptions& options) {
  if (datasets.size() < 2) throw ConfigError("leave_one_out: at least two datasets are required");
  if (schemes.empty()) throw ConfigError("leave_one_out: no scheme requested");
  std::vector<std::size_t> targets;
  for (std::size_t t = 0; t < datasets.size(); ++t) {
    if (options.targets.empty() ||
        std::find(options.targets.begin(), options.targets.end(), datasets[t].name) != options.targets.end())
      targets.push_back(t);
  }
  if (targets.empty()) throw ConfigError("leave_one_out: no dataset matches the requested targets");

  struct JobResult {
    std::vector<RunScore> per_scheme;
    double baseline = 0.0;
  };
  const std::size_t runs = options.runs;
  std::vector<JobResult> results(targets.size() * runs);

  parallel_for(results.size(), resolve_workers(options), [&](std::size_t job) {
    const std::size_t t = targets[job / runs];
    const std::uint64_t run_seed = derive_seed(options.seed, job % runs);
    const auto& target = datasets[t];

    std::vector<const data::LabeledDataset*> sources;
    for (std::size_t k = 0; k < datasets.size(); ++k)
      if (k != t) sources.push_back(&datasets[k]);
    auto run = prepare_run(sources, config, options, run_seed);
    auto art = train::train_mtl(run.tasks, run.config);

    std::vector<data::Instance> eval_set = target.instances;
    if (options.target_test_only) eval_set = data::stratified_split(target, options.ratios, derive_seed(run_seed, 999)).test;
    std::set<data::InstanceId> material = run.material;
    material.insert(art.seen.begin(), art.seen.end());
    std::size_t overlap = 0;
    for (const auto& inst : target.instances) overlap += material.count({target.name, inst.row});

    const auto examples = train::encode_examples(target.name, eval_set, run.vocab, run.config.encoder.max_len);
    const auto gold = data::binarize_labels(target.classes, eval_set);
    std::vector<std::vector<double>> embeddings;
    for (const auto& ex : examples) embeddings.push_back(model::embed(art.model, ex.seq));

    JobResult& out = results[job];
    out.baseline = majority_baseline(gold);
    for (Scheme scheme : schemes) {
      std::vector<int> pred;
      if (scheme == Scheme::Mv) {
        for (const auto& e : embeddings) pred.push_back(static_cast<int>(predict_mv_embedding(art.model, e)));
      } else {
        const auto nch = train::train_nch_head(art.model, run.tasks, run.config);
        for (const auto& e : embeddings)
          pred.push_back(static_cast<int>(model::argmax(model::head_probabilities(nch.head, e))));
      }
      out.per_scheme.push_back(RunScore{run_seed, classification_report(gold, pred, 2), overlap});
    }
  });

  std::vector<FoldResult> folds;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      FoldResult fold;
      fold.target = datasets[targets[ti]].name;
      fold.scheme = schemes[s];
      std::vector<double> macro, micro, weighted;
      for (std::size_t r = 0; r < runs; ++r) {
        const auto& job = results[ti * runs + r];
        fold.runs.push_back(job.per_scheme[s]);
        macro.push_back(job.per_scheme[s].report.macro_f1);
        micro.push_back(job.per_scheme[s].report.micro_f1);
        weighted.push_back(job.per_scheme[s].report.weighted_f1);
        fold.isolated = fold.isolated && job.per_scheme[s].id_overlap == 0;
        fold.majority_baseline_macro_f1 = job.baseline;
      }
      fold.mean_macro_f1 = mean_of(macro);
      fold.mean_micro_f1 = mean_of(micro);
      fold.mean_weighted_f1 = mean_of(weighted);
      folds.push_back(std::move(fold));
    }
  }
  std::stable_sort(folds.begin(), folds.end(), [](const FoldResult& a, const FoldResult& b) {
    return std::tie(a.target, a.scheme) < std::tie(b.target, b.scheme);
  });
  return folds;
}

TransferMatrix pairwise_matrix(std::span<const data::LabeledDataset> datasets, const train::TrainConfig& config,
                               const ExperimentOptions& options) {
  const std::size_t n = datasets.size();
  if (n < 2) throw ConfigError("pairwise_matrix: at least two datasets are required");
  const std::size_t runs = options.runs;
  TransferMatrix m;
  m.runs = runs;
  for (const auto& ds : datasets) m.names.push_back(ds.name);
  for (std::size_t r = 0; r < runs; ++r) m.seeds.push_back(derive_seed(options.seed, r));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.per_run.assign(n, std::vector<std::vector<double>>(n, std::vector<double>(runs, nan)));
  std::vector<std::vector<double>> in_domain(n, std::vector<double>(runs, 0.0));

  parallel_for(n * runs, resolve_workers(options), [&](std::size_t job) {
    const std::size_t s = job / runs, r = job % runs;
    const data::LabeledDataset* source[] = {&datasets[s]};
    auto run = prepare_run(source, config, options, m.seeds[r]);
    auto art = train::train_single(run.tasks[0], run.config);
    const auto score = [&](const std::string& name, std::span<const data::ClassDef> classes,
                           std::span<const data::Instance> instances) {
      const auto examples = train::encode_examples(name, instances, run.vocab, run.config.encoder.max_len);
      const auto gold = data::binarize_labels(classes, instances);
      std::vector<int> pred;
      for (const auto& ex : examples) pred.push_back(static_cast<int>(predict_mv(art.model, ex.seq)));
      return classification_report(gold, pred, 2).macro_f1;
    };
    for (std::size_t t = 0; t < n; ++t) {
      if (t == s) continue;
      m.per_run[s][t][r] = score(datasets[t].name, datasets[t].classes, datasets[t].instances);
    }
    in_domain[s][r] = score(datasets[s].name, datasets[s].classes, run.bundles[0].test);
  });

  m.cells.assign(n, std::vector<double>(n, nan));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t)
      if (s != t) m.cells[s][t] = mean_of(m.per_run[s][t]);
    m.in_domain.push_back(mean_of(in_domain[s]));
  }
  return m;
}

std::vector<CurvePoint> diminishing_returns(const data::LabeledDataset& target,
                                            std::span<const data::LabeledDataset> pool, std::size_t max_i,
                                            const train::TrainConfig& config, const ExperimentOptions& options,
                                            const CurveOptions& curve) {
  for (const auto& ds : pool)
    if (ds.name == target.name) throw ConfigError("diminishing_returns: pool must exclude the target");
  if (max_i > pool.size()) throw ConfigError("diminishing_returns: max_i exceeds the pool size");
  if (curve.iterations == 0) throw ConfigError("diminishing_returns: iterations must be positive");

  const std::size_t iters = curve.iterations;
  std::vector<CurvePoint> points(max_i + 1);
  for (std::size_t i = 0; i <= max_i; ++i) {
    points[i].target = target.name;
    points[i].i = i;
    points[i].samples.assign(iters, 0.0);
    points[i].sampled_sets.assign(iters, {});
    points[i].seeds.assign(iters, 0);
  }

  parallel_for((max_i + 1) * iters, resolve_workers(options), [&](std::size_t job) {
    const std::size_t i = job / iters, k = job % iters;
    std::mt19937_64 rng(derive_seed(options.seed, 10000 + i * 1000 + k));
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(i);
    std::sort(order.begin(), order.end());

    std::vector<const data::LabeledDataset*> members{&target};
    std::vector<std::string> names;
    for (auto idx : order) {
      members.push_back(&pool[idx]);
      names.push_back(pool[idx].name);
    }
    const std::uint64_t seed = curve.vary_training_seed ? derive_seed(options.seed, i * 1000 + k) : options.seed;
    auto run = prepare_run(members, config, options, seed);
    auto art = train::train_mtl(run.tasks, run.config);

    const auto& test = run.tasks[0].test;
    std::vector<int> gold;
    for (const auto& ex : test) gold.push_back(ex.label);
    const auto pred = train::predict_head(art.model, 0, test);
    points[i].samples[k] = classification_report(gold, pred, target.classes.size()).macro_f1;
    points[i].sampled_sets[k] = std::move(names);
    points[i].seeds[k] = seed;
  });

  for (auto& p : points) {
    p.mean = mean_of(p.samples);
    double ss = 0.0;
    for (double x : p.samples) ss += (x - p.mean) * (x - p.mean);
    const double sd = iters > 1 ? std::sqrt(ss / static_cast<double>(iters - 1)) : 0.0;
    const double half = 1.96 * sd / std::sqrt(static_cast<double>(iters));
    p.ci_low = p.mean - half;
    p.ci_high = p.mean + half;
  }
  return points;
}

void write_loo_csv(std::ostream& out, std::span<const FoldResult> folds) {
  csv::write_row(out, {"target", "scheme", "runs", "mean_macro_f1", "mean_micro_f1", "mean_weighted_f1",
                       "majority_baseline_macro_f1", "isolated", "run_macro_f1", "seeds"});
  for (const auto& f : folds) {
    std::vector<std::uint64_t> seeds;
    std::ostringstream per_run;
    for (std::size_t r = 0; r < f.runs.size(); ++r) {
      seeds.push_back(f.runs[r].seed);
      per_run << (r ? ";" : "") << fmt(f.runs[r].report.macro_f1);
    }
    csv::write_row(out, {f.target, to_string(f.scheme), std::to_string(f.runs.size()), fmt(f.mean_macro_f1),
                         fmt(f.mean_micro_f1), fmt(f.mean_weighted_f1), fmt(f.majority_baseline_macro_f1),
                         f.isolated ? "true" : "false", per_run.str(), join_seeds(seeds)});
  }
}

void write_matrix_csv(std::ostream& out, const TransferMatrix& m) {
  csv::write_row(out, {"source", "target", "runs", "mean_macro_f1", "run_macro_f1", "seeds"});
  for (std::size_t s = 0; s < m.names.size(); ++s) {
    for (std::size_t t = 0; t < m.names.size(); ++t) {
      if (s == t) continue;
      std::ostringstream per_run;
      for (std::size_t r = 0; r < m.per_run[s][t].size(); ++r) per_run << (r ? ";" : "") << fmt(m.per_run[s][t][r]);
      csv::write_row(out, {m.names[s], m.names[t], std::to_string(m.runs), fmt(m.cells[s][t]), per_run.str(),
                           join_seeds(m.seeds)});
    }
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points) {
  csv::write_row(out, {"target", "i", "mean_macro_f1", "ci95_low", "ci95_high", "samples", "sampled_sets", "seeds"});
  for (const auto& p : points) {
    std::ostringstream samples, sets;
    for (std::size_t k = 0; k < p.samples.size(); ++k) {
      samples << (k ? ";" : "") << fmt(p.samples[k]);
      sets << (k ? ";" : "");
      for (std::size_t j = 0; j < p.sampled_sets[k].size(); ++j) sets << (j ? "+" : "") << p.sampled_sets[k][j];
    }
    csv::write_row(out, {p.target, std::to_string(p.i), fmt(p.mean), fmt(p.ci_low), fmt(p.ci_high), samples.str(),
                         sets.str(), join_seeds(p.seeds)});
  }
}

json loo_summary(std::span<const FoldResult> folds) {
  json j = json::array();
  for (const auto& f : folds) {
    json seeds = json::array();
    for (const auto& r : f.runs) seeds.push_back(r.seed);
    j.push_back({{"target", f.target},
                 {"scheme", to_string(f.scheme)},
                 {"mean_macro_f1", f.mean_macro_f1},
                 {"mean_micro_f1", f.mean_micro_f1},
                 {"mean_weighted_f1", f.mean_weighted_f1},
                 {"majority_baseline_macro_f1", f.majority_baseline_macro_f1},
                 {"isolated", f.isolated},
                 {"seeds", seeds}});
  }
  return j;
}

json matrix_summary(const TransferMatrix& m) {
  json cells = json::array();
  for (std::size_t s = 0; s < m.names.size(); ++s)
    for (std::size_t t = 0; t < m.names.size(); ++t)
      if (s != t) cells.push_back({{"source", m.names[s]}, {"target", m.names[t]}, {"mean_macro_f1", m.cells[s][t]}});
  return {{"datasets", m.names}, {"runs", m.runs}, {"seeds", m.seeds}, {"in_domain", m.in_domain}, {"cells", cells}};
}

json curve_summary(std::span<const CurvePoint> points) {
  json j = json::array();
  for (const auto& p : points)
    j.push_back({{"target", p.target},
                 {"i", p.i},
                 {"mean_macro_f1", p.mean},
                 {"ci95", {p.ci_low, p.ci_high}},
                 {"samples", p.samples},
                 {"sampled_sets", p.sampled_sets},
                 {"seeds", p.seeds}});
  return j;
}

}  // namespace hatemtl::eval
