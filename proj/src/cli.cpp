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

#include "hatemtl/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "hatemtl/analysis.hpp"
#include "hatemtl/annotation.hpp"
#include "hatemtl/csv.hpp"
#include "hatemtl/error.hpp"
#include "hatemtl/model.hpp"
#include "hatemtl/textnorm.hpp"
#include "hatemtl/tokenizer.hpp"

namespace hatemtl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  const auto resolve = [&](const fs::path& p) { return p.is_absolute() || base_dir.empty() ? p : base_dir / p; };
  try {
    for (const auto& m : j.value("manifests", json::array())) c.manifests.push_back(resolve(m.get<std::string>()));
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("train")) c.train = train::TrainConfig::from_json(j.at("train"));
    if (j.contains("experiment")) {
      const auto& e = j.at("experiment");
      c.experiment.runs = e.value("runs", c.experiment.runs);
      c.experiment.oversample = e.value("oversample", c.experiment.oversample);
      c.experiment.target_test_only = e.value("target_test_only", c.experiment.target_test_only);
      c.experiment.targets = e.value("targets", c.experiment.targets);
      if (e.contains("split")) {
        const auto s = e.at("split").get<std::vector<double>>();
        if (s.size() != 3) throw ConfigError("experiment.split must have three entries");
        c.experiment.ratios = {s[0], s[1], s[2]};
      }
      c.curve.iterations = e.value("iterations", c.curve.iterations);
      c.curve.vary_training_seed = e.value("vary_training_seed", c.curve.vary_training_seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.experiment.seed = c.seed;
  c.train.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + file.string() + ": " + e.what());
  }
  return from_json(j, file.parent_path());
}

json RunConfig::to_json() const {
  json m = json::array();
  for (const auto& p : manifests) m.push_back(p.string());
  const auto& r = experiment.ratios;
  return {{"manifests", m},
          {"output_dir", output_dir.string()},
          {"seed", seed},
          {"train", train.to_json()},
          {"experiment",
           {{"runs", experiment.runs},
            {"oversample", experiment.oversample},
            {"target_test_only", experiment.target_test_only},
            {"targets", experiment.targets},
            {"split", {r.train, r.validation, r.test}},
            {"iterations", curve.iterations},
            {"vary_training_seed", curve.vary_training_seed}}}};
}

std::string git_blob_sha1(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || !EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) ||
      !EVP_DigestUpdate(ctx.get(), header.data(), header.size()) ||
      !EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) || !EVP_DigestFinal_ex(ctx.get(), digest, &len)) {
    throw Error("sha1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

namespace {

std::string fmt(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  return in;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

/// Collects what a run manifest records about one invocation.
class RunRecord {
 public:
  RunRecord(std::string command, std::vector<std::string> args) : command_(std::move(command)), args_(std::move(args)) {}

  void input(const fs::path& p) { inputs_[p.string()] = git_blob_sha1(p); }
  void output(const fs::path& p) { outputs_.push_back(p.string()); }
  json& extra() { return extra_; }

  void write(const fs::path& dir) const {
    json inputs = json::array();
    for (const auto& [path, hash] : inputs_) inputs.push_back({{"path", path}, {"git_blob_sha1", hash}});
    json j = {{"command", command_}, {"argv", args_}, {"inputs", inputs}, {"outputs", outputs_}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    auto out = open_out(dir / "run_manifest.json");
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

struct Loaded {
  RunConfig config;
  std::vector<data::LabeledDataset> datasets;
};

Loaded load_config(const fs::path& config_file, const std::optional<fs::path>& out_dir,
                   const std::optional<std::uint64_t>& seed, RunRecord& record) {
  Loaded l;
  l.config = RunConfig::load(config_file);
  record.input(config_file);
  if (out_dir) l.config.output_dir = *out_dir;
  if (seed) {
    l.config.seed = *seed;
    l.config.experiment.seed = *seed;
  }
  if (l.config.manifests.empty()) throw ConfigError("config lists no dataset manifests");
  for (const auto& m : l.config.manifests) {
    const auto manifest = data::DatasetManifest::load(m);
    record.input(m);
    l.datasets.push_back(data::load_dataset(manifest));
    record.input(manifest.path);
  }
  ensure_dir(l.config.output_dir);
  record.extra()["config"] = l.config.to_json();
  json dropped = json::object();
  for (const auto& ds : l.datasets) dropped[ds.name] = ds.dropped;
  record.extra()["dropped_empty_texts"] = dropped;
  return l;
}

std::vector<eval::Scheme> parse_schemes(const std::string& s) {
  if (s == "both") return {eval::Scheme::Nch, eval::Scheme::Mv};
  return {eval::parse_scheme(s)};
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string single;
  bool nch = false;
  std::string scheme = "nch";
  std::string target;
  std::size_t max_i = 0;
  std::string model;
  std::string vocab;
  std::string input;
  std::string output;
  std::string strategy = "HL";
  std::string gold;
  std::vector<std::string> filters{"HARMFUL", "HARMLESS"};
  std::string events;
  std::size_t max_lag = 3;
  std::string bucket = "month";
};

std::optional<fs::path> out_override(const Options& o) {
  return o.out.empty() ? std::nullopt : std::optional<fs::path>(o.out);
}

fs::path out_dir_or_cwd(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  ensure_dir(dir);
  return dir;
}

void cmd_train(const Options& o, RunRecord& record, std::ostream& out) {
  auto l = load_config(o.config, out_override(o), o.seed, record);
  std::vector<const data::LabeledDataset*> members;
  for (const auto& ds : l.datasets)
    if (o.single.empty() || ds.name == o.single) members.push_back(&ds);
  if (members.empty()) throw ConfigError("no dataset named '" + o.single + "' in the config");

  auto run = eval::prepare_run(members, l.config.train, l.config.experiment, l.config.seed);
  auto art = o.single.empty() ? train::train_mtl(run.tasks, run.config) : train::train_single(run.tasks[0], run.config);
  const auto dir = l.config.output_dir;

  std::vector<std::string> names;
  for (const auto& t : run.tasks) names.push_back(t.name);
  {
    auto f = open_out(dir / "history.csv");
    train::write_history_csv(f, names, art.history);
    record.output(dir / "history.csv");
  }
  if (o.nch) {
    auto nch = train::train_nch_head(art.model, run.tasks, run.config);
    art.model.nch_head = std::move(nch.head);
    const std::vector<std::string> nch_name{"nch"};
    auto f = open_out(dir / "nch_history.csv");
    train::write_history_csv(f, nch_name, nch.history);
    record.output(dir / "nch_history.csv");
    record.extra()["nch_best_epoch"] = nch.best_epoch;
  }
  model::serialize(art.model, dir / "model.bin");
  run.vocab.save(dir / "vocab.txt");
  record.output(dir / "model.bin");
  record.output(dir / "vocab.txt");
  record.extra()["seeds"] = {{"run", l.config.seed}};
  record.extra()["best_epoch"] = art.best_epoch;
  record.write(dir);
  out << "trained " << names.size() << " head(s); best epoch " << art.best_epoch << "; model written to "
      << (dir / "model.bin").string() << '\n';
}

void cmd_loo(const Options& o, RunRecord& record, std::ostream& out) {
  auto l = load_config(o.config, out_override(o), o.seed, record);
  const auto schemes = parse_schemes(o.scheme);
  const auto folds = eval::leave_one_out(l.datasets, schemes, l.config.train, l.config.experiment);
  const auto dir = l.config.output_dir;
  {
    auto f = open_out(dir / "loo.csv");
    eval::write_loo_csv(f, folds);
    auto s = open_out(dir / "loo_summary.json");
    s << eval::loo_summary(folds).dump(2) << '\n';
  }
  record.output(dir / "loo.csv");
  record.output(dir / "loo_summary.json");
  record.write(dir);
  for (const auto& f : folds)
    out << f.target << ' ' << eval::to_string(f.scheme) << " macro_f1=" << fmt(f.mean_macro_f1)
        << " baseline=" << fmt(f.majority_baseline_macro_f1) << (f.isolated ? "" : " NOT-ISOLATED") << '\n';
}

void cmd_pairwise(const Options& o, RunRecord& record, std::ostream& out) {
  auto l = load_config(o.config, out_override(o), o.seed, record);
  const auto m = eval::pairwise_matrix(l.datasets, l.config.train, l.config.experiment);
  const auto dir = l.config.output_dir;
  {
    auto f = open_out(dir / "matrix.csv");
    eval::write_matrix_csv(f, m);
    auto s = open_out(dir / "matrix_summary.json");
    s << eval::matrix_summary(m).dump(2) << '\n';
  }
  record.output(dir / "matrix.csv");
  record.output(dir / "matrix_summary.json");
  record.write(dir);
  out << "wrote " << m.names.size() * (m.names.size() - 1) << " cells to " << (dir / "matrix.csv").string() << '\n';
}

void cmd_curve(const Options& o, RunRecord& record, std::ostream& out) {
  auto l = load_config(o.config, out_override(o), o.seed, record);
  const data::LabeledDataset* target = nullptr;
  std::vector<data::LabeledDataset> pool;
  for (const auto& ds : l.datasets) {
    if (ds.name == o.target) target = &ds;
    else pool.push_back(ds);
  }
  if (!target) throw ConfigError("no dataset named '" + o.target + "' in the config");
  const auto points = eval::diminishing_returns(*target, pool, o.max_i, l.config.train, l.config.experiment,
                                                l.config.curve);
  const auto dir = l.config.output_dir;
  {
    auto f = open_out(dir / "curve.csv");
    eval::write_curve_csv(f, points);
    auto s = open_out(dir / "curve_summary.json");
    s << eval::curve_summary(points).dump(2) << '\n';
  }
  record.output(dir / "curve.csv");
  record.output(dir / "curve_summary.json");
  record.write(dir);
  for (const auto& p : points)
    out << "i=" << p.i << " mean=" << fmt(p.mean) << " ci95=[" << fmt(p.ci_low) << ", " << fmt(p.ci_high) << "]\n";
}

void cmd_predict(const Options& o, RunRecord& record, std::ostream& out) {
  const fs::path model_path = o.model;
  const fs::path vocab_path = o.vocab.empty() ? model_path.parent_path() / "vocab.txt" : fs::path(o.vocab);
  const auto m = model::deserialize(model_path);
  const auto vocab = tok::Vocabulary::load(vocab_path);
  record.input(model_path);
  record.input(vocab_path);
  record.input(o.input);
  const auto scheme = eval::parse_scheme(o.scheme);
  if (scheme == eval::Scheme::Nch && !m.nch_head)
    throw ConfigError("model " + model_path.string() + " has no NCH head; train it with --nch or use --scheme mv");

  auto in = open_in(o.input);
  const fs::path output = o.output.empty() ? out_dir_or_cwd(o) / "predictions.csv" : fs::path(o.output);
  auto f = open_out(output);
  csv::write_row(f, {"row", "id", "prediction"});
  std::string line;
  std::size_t row = 0, harmful = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw LoadError("input row " + std::to_string(row) + ": " + e.what());
    }
    if (!j.contains("text") || !j["text"].is_string())
      throw LoadError("input row " + std::to_string(row) + ": missing text field");
    const auto text = text::normalize(j["text"].get<std::string>()).value_or("");
    const auto seq = tok::encode(vocab, text, m.config.max_len);
    const auto label = scheme == eval::Scheme::Nch ? eval::predict_nch(m, *m.nch_head, seq) : eval::predict_mv(m, seq);
    const std::string id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump()) : "";
    csv::write_row(f, {std::to_string(row), id, label == data::BinaryLabel::Harmful ? "harmful" : "harmless"});
    harmful += label == data::BinaryLabel::Harmful;
    ++row;
  }
  record.output(output);
  record.extra()["scheme"] = eval::to_string(scheme);
  record.write(output.parent_path().empty() ? fs::path(".") : output.parent_path());
  out << row << " predictions (" << harmful << " harmful) written to " << output.string() << '\n';
}

std::vector<annot::AnnotationRecord> load_records(const Options& o, RunRecord& record) {
  auto in = open_in(o.input);
  record.input(o.input);
  return annot::read_records(in);
}

void cmd_annot_aggregate(const Options& o, RunRecord& record, std::ostream& out) {
  const auto records = load_records(o, record);
  const auto strategy = annot::parse_strategy(o.strategy);
  const auto items = annot::aggregate(records, strategy);
  const auto dir = out_dir_or_cwd(o);
  {
    auto f = open_out(dir / "aggregated.csv");
    annot::write_aggregated_csv(f, items);
    auto b = open_out(dir / "consensus_binary.csv");
    annot::write_histogram_csv(b, annot::consensus_histogram(items, annot::ConsensusMode::Binary));
    auto t = open_out(dir / "consensus_three_class.csv");
    annot::write_histogram_csv(t, annot::consensus_histogram(items, annot::ConsensusMode::ThreeClass));
  }
  for (const auto* name : {"aggregated.csv", "consensus_binary.csv", "consensus_three_class.csv"})
    record.output(dir / name);
  const double mb = annot::mean_consensus(items, annot::ConsensusMode::Binary);
  const double mt = annot::mean_consensus(items, annot::ConsensusMode::ThreeClass);
  record.extra()["strategy"] = annot::to_string(strategy);
  record.extra()["mean_consensus"] = {{"binary", mb}, {"three_class", mt}};
  record.write(dir);
  out << items.size() << " items aggregated with " << annot::to_string(strategy) << "; mean consensus binary "
      << fmt(mb) << ", three-class " << fmt(mt) << '\n';
}

void cmd_annot_alpha(const Options& o, RunRecord& record, std::ostream& out) {
  const auto records = load_records(o, record);
  const double alpha = annot::krippendorff_alpha(records);
  const auto dir = out_dir_or_cwd(o);
  {
    auto f = open_out(dir / "alpha.json");
    f << json{{"krippendorff_alpha", alpha}, {"records", records.size()}}.dump(2) << '\n';
  }
  record.output(dir / "alpha.json");
  record.write(dir);
  out << "alpha " << fmt(alpha) << '\n';
}

void cmd_annot_workers(const Options& o, RunRecord& record, std::ostream& out) {
  const auto records = load_records(o, record);
  const auto strategy = annot::parse_strategy(o.strategy);
  const auto workers = annot::worker_report(records, annot::aggregate(records, strategy));
  const auto dir = out_dir_or_cwd(o);
  {
    auto f = open_out(dir / "workers.csv");
    annot::write_workers_csv(f, workers);
  }
  record.output(dir / "workers.csv");
  record.extra()["strategy"] = annot::to_string(strategy);
  record.write(dir);
  out << workers.size() << " workers reported\n";
}

void cmd_annot_compare(const Options& o, RunRecord& record, std::ostream& out) {
  const auto records = load_records(o, record);
  auto gin = open_in(o.gold);
  record.input(o.gold);
  const auto scores = annot::compare_strategies(records, annot::read_gold(gin));
  const auto dir = out_dir_or_cwd(o);
  {
    auto f = open_out(dir / "compare.csv");
    annot::write_compare_csv(f, scores);
  }
  record.output(dir / "compare.csv");
  record.write(dir);
  for (const auto& s : scores)
    out << annot::to_string(s.strategy) << " three_class=" << fmt(s.three_class_macro_f1)
        << " binary=" << fmt(s.binary_macro_f1) << '\n';
}

void cmd_analyze_ruzicka(const Options& o, RunRecord& record, std::ostream& out) {
  auto l = load_config(o.config, out_override(o), o.seed, record);
  const auto dir = l.config.output_dir;
  auto f = open_out(dir / "ruzicka.csv");
  csv::write_row(f, {"filter", "dataset_a", "dataset_b", "similarity"});
  std::size_t rows = 0;
  for (const auto& name : o.filters) {
    const auto filter = analysis::ClassFilter::parse(name);
    std::vector<analysis::TermProfile> profiles;
    for (const auto& ds : l.datasets) profiles.push_back(analysis::term_profile(ds, filter));
    for (std::size_t a = 0; a < l.datasets.size(); ++a)
      for (std::size_t b = a + 1; b < l.datasets.size(); ++b, ++rows)
        csv::write_row(f, {filter.to_string(), l.datasets[a].name, l.datasets[b].name,
                           fmt(analysis::ruzicka(profiles[a], profiles[b]))});
  }
  f.close();
  record.output(dir / "ruzicka.csv");
  record.write(dir);
  out << rows << " similarities written to " << (dir / "ruzicka.csv").string() << '\n';
}

void cmd_analyze_timeseries(const Options& o, RunRecord& record, std::ostream& out) {
  auto in = open_in(o.input);
  record.input(o.input);
  const auto posts = analysis::read_posts(in);
  const auto bucket = analysis::parse_bucket(o.bucket);
  const auto series = analysis::series_by_author(posts, bucket);
  const auto dir = out_dir_or_cwd(o);

  {
    auto f = open_out(dir / "series.csv");
    analysis::write_series_csv(f, series);
  }
  record.output(dir / "series.csv");

  if (!o.events.empty()) {
    auto ein = open_in(o.events);
    record.input(o.events);
    const auto events = analysis::read_events(ein);
    auto f = open_out(dir / "event_deltas.csv");
    csv::write_row(f, {"author", "event", "date", "before", "after", "delta"});
    for (const auto& [author, s] : series)
      for (const auto& e : events) {
        const auto w = analysis::event_window_delta(s, e.date);
        csv::write_row(f, {author, e.name, timeutil::format_date(e.date), fmt(w.before), fmt(w.after), fmt(w.delta)});
      }
    record.output(dir / "event_deltas.csv");
  }

  auto corr = open_out(dir / "correlation.csv");
  csv::write_row(corr, {"author_a", "author_b", "overlap", "pearson", "error"});
  auto gr = open_out(dir / "granger.csv");
  csv::write_row(gr, {"cause", "effect", "lag", "sample_size", "f", "p_value", "significant", "error"});
  std::size_t significant = 0;
  for (auto a = series.begin(); a != series.end(); ++a) {
    for (auto b = series.begin(); b != series.end(); ++b) {
      if (a == b) continue;
      const auto pair = analysis::align(a->second, b->second);
      if (a->first < b->first) {
        std::string r, error;
        try {
          r = fmt(analysis::pearson(pair.x, pair.y));
        } catch (const Error& e) {
          error = e.what();
        }
        csv::write_row(corr, {a->first, b->first, std::to_string(pair.x.size()), r, error});
      }
      for (std::size_t lag = 1; lag <= o.max_lag; ++lag) {
        try {
          const auto g = analysis::granger(pair.x, pair.y, lag).back();
          const bool sig = g.p_value < 0.05;
          significant += sig;
          csv::write_row(gr, {a->first, b->first, std::to_string(lag), std::to_string(g.sample_size), fmt(g.f),
                              fmt(g.p_value), sig ? "true" : "false", ""});
        } catch (const Error& e) {
          csv::write_row(gr, {a->first, b->first, std::to_string(lag), "", "", "", "", e.what()});
        }
      }
    }
  }
  corr.close();
  gr.close();
  record.output(dir / "correlation.csv");
  record.output(dir / "granger.csv");
  record.extra()["bucket"] = analysis::to_string(bucket);
  record.extra()["granger_max_lag"] = o.max_lag;
  record.write(dir);
  out << series.size() << " series; " << significant << " significant Granger tests at 0.05\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task hate-speech classification toolkit", "hatemtl"};
  app.require_subcommand(1);
  Options o;

  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", o.seed, "Global seed (overrides the config)");
  };

  auto* train_cmd = app.add_subcommand("train", "Train a multi-task (or single-dataset) model");
  add_config(train_cmd);
  train_cmd->add_option("--single", o.single, "Train only on the named dataset");
  train_cmd->add_flag("--nch", o.nch, "Also fit a new binary classification head on the frozen encoder");

  auto* loo_cmd = app.add_subcommand("loo", "Leave-one-dataset-out evaluation");
  add_config(loo_cmd);
  loo_cmd->add_option("--scheme", o.scheme, "nch, mv or both")->check(CLI::IsMember({"nch", "mv", "both"}));

  auto* pairwise_cmd = app.add_subcommand("pairwise", "Single-source transfer matrix");
  add_config(pairwise_cmd);

  auto* curve_cmd = app.add_subcommand("curve", "Target performance against the number of joint datasets");
  add_config(curve_cmd);
  curve_cmd->add_option("--target", o.target, "Target dataset name")->required();
  curve_cmd->add_option("--max-i", o.max_i, "Largest number of auxiliary datasets")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Binary predictions for unlabeled texts");
  predict_cmd->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--vocab", o.vocab, "Vocabulary file (default: vocab.txt next to the model)");
  predict_cmd->add_option("--scheme", o.scheme, "nch or mv")->check(CLI::IsMember({"nch", "mv"}));
  predict_cmd->add_option("--input", o.input, "JSONL with a text field")->required();
  predict_cmd->add_option("--output", o.output, "Predictions CSV (default: <out>/predictions.csv)");
  predict_cmd->add_option("--out", o.out, "Output directory");

  auto* annot_cmd = app.add_subcommand("annot", "Crowd annotation aggregation and agreement");
  annot_cmd->require_subcommand(1);
  const auto add_annot = [&](const char* name, const char* help) {
    auto* c = annot_cmd->add_subcommand(name, help);
    c->add_option("--input", o.input, "CSV with item_id,worker_id,vote")->required();
    c->add_option("--out", o.out, "Output directory");
    return c;
  };
  auto* aggregate_cmd = add_annot("aggregate", "Aggregate votes into final labels");
  aggregate_cmd->add_option("--strategy", o.strategy, "HL, HH, LH, LL or NAIVE");
  auto* alpha_cmd = add_annot("alpha", "Krippendorff's alpha (nominal)");
  auto* workers_cmd = add_annot("workers", "Per-worker agreement report");
  workers_cmd->add_option("--strategy", o.strategy, "Strategy used for the final labels");
  auto* compare_cmd = add_annot("compare", "Score every tie-breaking strategy against gold labels");
  compare_cmd->add_option("--gold", o.gold, "CSV with item_id,label")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "Vocabulary similarity and posting time series");
  analyze_cmd->require_subcommand(1);
  auto* ruzicka_cmd = analyze_cmd->add_subcommand("ruzicka", "Pairwise unigram-profile similarity");
  add_config(ruzicka_cmd);
  ruzicka_cmd->add_option("--filter", o.filters, "HARMFUL, HARMLESS, ALL or a class name (repeatable)");
  auto* ts_cmd = analyze_cmd->add_subcommand("timeseries", "Per-author series, event windows, correlation, Granger");
  ts_cmd->add_option("--input", o.input, "JSONL of classified posts")->required();
  ts_cmd->add_option("--events", o.events, "CSV with name,date");
  ts_cmd->add_option("--granger-maxlag", o.max_lag, "Largest Granger lag")->check(CLI::PositiveNumber);
  ts_cmd->add_option("--bucket", o.bucket, "day, week or month");
  ts_cmd->add_option("--out", o.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const std::pair<CLI::App*, void (*)(const Options&, RunRecord&, std::ostream&)> commands[] = {
      {train_cmd, cmd_train},
      {loo_cmd, cmd_loo},
      {pairwise_cmd, cmd_pairwise},
      {curve_cmd, cmd_curve},
      {predict_cmd, cmd_predict},
      {aggregate_cmd, cmd_annot_aggregate},
      {alpha_cmd, cmd_annot_alpha},
      {workers_cmd, cmd_annot_workers},
      {compare_cmd, cmd_annot_compare},
      {ruzicka_cmd, cmd_analyze_ruzicka},
      {ts_cmd, cmd_analyze_timeseries},
  };
  try {
    for (const auto& [cmd, fn] : commands) {
      if (!cmd->parsed()) continue;
      std::string name = cmd->get_name();
      if (cmd->get_parent() != &app) name = cmd->get_parent()->get_name() + " " + name;
      RunRecord record(name, args);
      fn(o, record, out);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace hatemtl::cli
