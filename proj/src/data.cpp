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

#include "hatemtl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "hatemtl/csv.hpp"
#include "hatemtl/error.hpp"
#include "hatemtl/textnorm.hpp"

namespace hatemtl::data {

using nlohmann::json;

void DatasetManifest::validate() const {
  if (name.empty()) throw ConfigError("manifest: dataset name is empty");
  if (classes.size() < 2) throw ConfigError("manifest '" + name + "': needs at least two classes");
  std::set<std::string> seen;
  bool harmful = false, harmless = false;
  for (const auto& c : classes) {
    if (!seen.insert(c.name).second) throw ConfigError("manifest '" + name + "': duplicate class '" + c.name + "'");
    (c.harmful ? harmful : harmless) = true;
  }
  if (!harmful || !harmless) {
    throw ConfigError("manifest '" + name + "': needs at least one harmful and one harmless class");
  }
}

std::optional<std::size_t> DatasetManifest::class_index(std::string_view label) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == label) return i;
  return std::nullopt;
}

DatasetManifest DatasetManifest::from_json(const json& j, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    for (const auto& c : j.at("classes")) m.classes.push_back({c.at("name").get<std::string>(), c.at("harmful").get<bool>()});
    std::filesystem::path p = j.value("path", std::string{});
    m.path = p.empty() || p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    const auto format = j.value("format", std::string("jsonl"));
    if (format == "jsonl") m.format = Format::Jsonl;
    else if (format == "csv") m.format = Format::Csv;
    else throw ConfigError("manifest '" + m.name + "': unknown format '" + format + "'");
    if (j.contains("columns")) {
      const auto& c = j.at("columns");
      m.columns.text = c.value("text", m.columns.text);
      m.columns.label = c.value("label", m.columns.label);
      if (c.contains("timestamp")) m.columns.timestamp = c.at("timestamp").get<std::string>();
      if (c.contains("author")) m.columns.author = c.at("author").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read manifest " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + file.string() + ": " + e.what());
  }
  return from_json(j, file.parent_path());
}

json DatasetManifest::to_json() const {
  json classes_json = json::array();
  for (const auto& c : classes) classes_json.push_back({{"name", c.name}, {"harmful", c.harmful}});
  json cols = {{"text", columns.text}, {"label", columns.label}};
  if (columns.timestamp) cols["timestamp"] = *columns.timestamp;
  if (columns.author) cols["author"] = *columns.author;
  return {{"name", name},
          {"classes", classes_json},
          {"path", path.string()},
          {"format", format == Format::Jsonl ? "jsonl" : "csv"},
          {"columns", cols}};
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& inst : instances) ++counts[static_cast<std::size_t>(inst.label)];
  return counts;
}

namespace {

struct RawRow {
  std::string text;
  std::string label;
  std::optional<std::size_t> label_index;
  std::optional<std::string> timestamp;
  std::optional<std::string> author;
};

std::string row_error(const DatasetManifest& m, std::size_t row, const std::string& what) {
  return "dataset '" + m.name + "' row " + std::to_string(row) + ": " + what;
}

std::vector<RawRow> read_jsonl(const DatasetManifest& m, std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t row = 0;
  for (; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw LoadError(row_error(m, row, std::string("invalid JSON: ") + e.what()));
    }
    RawRow r;
    if (!j.contains(m.columns.text) || !j[m.columns.text].is_string())
      throw LoadError(row_error(m, row, "missing text field '" + m.columns.text + "'"));
    r.text = j[m.columns.text].get<std::string>();
    if (!j.contains(m.columns.label)) throw LoadError(row_error(m, row, "missing label field '" + m.columns.label + "'"));
    const auto& label = j[m.columns.label];
    if (label.is_string()) {
      r.label = label.get<std::string>();
    } else if (label.is_number_integer()) {
      r.label = label.dump();
      const auto v = label.get<long long>();
      if (v >= 0 && static_cast<std::size_t>(v) < m.classes.size()) r.label_index = static_cast<std::size_t>(v);
    } else {
      r.label = label.dump();
    }
    const auto optional_field = [&](const std::optional<std::string>& col) -> std::optional<std::string> {
      if (!col || !j.contains(*col) || j[*col].is_null()) return std::nullopt;
      return j[*col].is_string() ? j[*col].get<std::string>() : j[*col].dump();
    };
    r.timestamp = optional_field(m.columns.timestamp ? m.columns.timestamp : std::optional<std::string>("timestamp"));
    r.author = optional_field(m.columns.author ? m.columns.author : std::optional<std::string>("author"));
    rows.push_back(std::move(r));
    ++row;
  }
  return rows;
}

std::vector<RawRow> read_csv(const DatasetManifest& m, std::istream& in) {
  const auto table = csv::read_table(in);
  const auto need = [&](const std::string& col) {
    auto idx = table.column(col);
    if (!idx) throw LoadError("dataset '" + m.name + "': CSV has no column '" + col + "'");
    return *idx;
  };
  const auto text_col = need(m.columns.text);
  const auto label_col = need(m.columns.label);
  const auto ts_col = m.columns.timestamp ? std::optional(need(*m.columns.timestamp)) : std::nullopt;
  const auto author_col = m.columns.author ? std::optional(need(*m.columns.author)) : std::nullopt;
  std::vector<RawRow> rows;
  for (const auto& fields : table.rows) {
    RawRow r;
    r.text = fields[text_col];
    r.label = fields[label_col];
    if (ts_col && !fields[*ts_col].empty()) r.timestamp = fields[*ts_col];
    if (author_col && !fields[*author_col].empty()) r.author = fields[*author_col];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

LabeledDataset load_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  std::ifstream in(manifest.path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset file " + manifest.path.string());
  const auto rows = manifest.format == Format::Jsonl ? read_jsonl(manifest, in) : read_csv(manifest, in);

  LabeledDataset ds;
  ds.name = manifest.name;
  ds.classes = manifest.classes;
  for (std::size_t row = 0; row < rows.size(); ++row) {
    const auto& r = rows[row];
    auto index = manifest.class_index(r.label);
    if (!index) index = r.label_index;
    if (!index) throw LoadError(row_error(manifest, row, "unknown label '" + r.label + "'"));
    auto normalized = text::normalize(r.text);
    if (!normalized) {
      ++ds.dropped;
      continue;
    }
    Instance inst;
    inst.row = row;
    inst.text = std::move(*normalized);
    inst.label = static_cast<int>(*index);
    if (r.timestamp) {
      try {
        inst.timestamp = timeutil::parse(*r.timestamp);
      } catch (const LoadError& e) {
        throw LoadError(row_error(manifest, row, e.what()));
      }
    }
    inst.author = r.author;
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

SplitSizes split_sizes(std::size_t k, const SplitRatios& ratios) {
  const double total = ratios.train + ratios.validation + ratios.test;
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0)) {
    throw ConfigError("split ratios must all be positive");
  }
  // Guard against 0.7*10 == 6.9999... style representation error.
  constexpr double kSlack = 1e-9;
  const double val_exact = static_cast<double>(k) * ratios.validation / total;
  const double train_exact = static_cast<double>(k) * ratios.train / total;
  const auto validation = static_cast<std::size_t>(std::floor(val_exact + kSlack));
  const double val_frac = std::max(0.0, val_exact - static_cast<double>(validation));
  const auto train = static_cast<std::size_t>(std::floor(train_exact + val_frac + kSlack));
  return {train, validation, k - train - validation};
}

SplitBundle stratified_split(const LabeledDataset& dataset, SplitRatios ratios, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(dataset.classes.size());
  for (std::size_t i = 0; i < dataset.instances.size(); ++i)
    by_class[static_cast<std::size_t>(dataset.instances[i].label)].push_back(i);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 3) {
      throw SplitError("dataset '" + dataset.name + "': class '" + dataset.classes[c].name + "' has " +
                       std::to_string(by_class[c].size()) + " instances, at least 3 are required");
    }
  }

  SplitBundle bundle;
  bundle.name = dataset.name;
  bundle.classes = dataset.classes;
  bundle.ratios = ratios;
  bundle.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto sizes = split_sizes(members.size(), ratios);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& inst = dataset.instances[members[i]];
      if (i < sizes.train) bundle.train.push_back(inst);
      else if (i < sizes.train + sizes.validation) bundle.validation.push_back(inst);
      else bundle.test.push_back(inst);
    }
  }
  return bundle;
}

std::vector<Instance> oversample(std::span<const Instance> train, std::size_t num_classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto label = static_cast<std::size_t>(train[i].label);
    if (label >= num_classes) throw ContractViolation("oversample: label out of range");
    by_class[label].push_back(i);
  }
  std::size_t target = 0;
  for (const auto& members : by_class) target = std::max(target, members.size());

  std::vector<Instance> out(train.begin(), train.end());
  std::mt19937_64 rng(seed);
  for (const auto& members : by_class) {
    if (members.empty() || members.size() == target) continue;
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t n = members.size(); n < target; ++n) out.push_back(train[members[pick(rng)]]);
  }
  return out;
}

BinaryLabel binarize(std::span<const ClassDef> classes, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes.size()) {
    throw ContractViolation("binarize: label index " + std::to_string(label) + " out of range");
  }
  return classes[static_cast<std::size_t>(label)].harmful ? BinaryLabel::Harmful : BinaryLabel::Harmless;
}

BinaryLabel binarize(const DatasetManifest& manifest, std::string_view label) {
  const auto index = manifest.class_index(label);
  if (!index) throw ContractViolation("binarize: '" + std::string(label) + "' is not a class of '" + manifest.name + "'");
  return binarize(manifest.classes, static_cast<int>(*index));
}

std::vector<int> binarize_labels(std::span<const ClassDef> classes, std::span<const Instance> instances) {
  std::vector<int> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(static_cast<int>(binarize(classes, inst.label)));
  return out;
}

}  // namespace hatemtl::data
