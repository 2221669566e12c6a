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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatemtl/timeutil.hpp"
#include "json.hpp"

namespace hatemtl::data {

struct ClassDef {
  std::string name;
  bool harmful = false;

  bool operator==(const ClassDef&) const = default;
};

enum class Format { Jsonl, Csv };

struct ColumnMap {
  std::string text = "text";
  std::string label = "label";
  std::optional<std::string> timestamp;
  std::optional<std::string> author;
};

/// Describes one dataset on disk and how its native classes binarize.
struct DatasetManifest {
  std::string name;
  std::vector<ClassDef> classes;
  std::filesystem::path path;
  Format format = Format::Jsonl;
  ColumnMap columns;

  /// Throws ConfigError unless there are >= 2 uniquely named classes with at
  /// least one harmful and one harmless.
  void validate() const;
  std::optional<std::size_t> class_index(std::string_view label) const;

  /// Relative `path` values are resolved against `base_dir`.
  static DatasetManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static DatasetManifest load(const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

struct Instance {
  std::size_t row = 0;  // 0-based record index in the source file
  std::string text;     // normalized
  int label = 0;
  std::optional<timeutil::Instant> timestamp;
  std::optional<std::string> author;
};

/// Stable identity of an instance across splits, resamples and experiments.
struct InstanceId {
  std::string dataset;
  std::size_t row = 0;

  auto operator<=>(const InstanceId&) const = default;
};

struct LabeledDataset {
  std::string name;
  std::vector<ClassDef> classes;
  std::vector<Instance> instances;
  std::size_t dropped = 0;  // rows whose text normalized to nothing

  std::vector<std::size_t> class_counts() const;
};

struct SplitRatios {
  double train = 8;
  double validation = 1;
  double test = 1;
};

struct SplitBundle {
  std::string name;
  std::vector<ClassDef> classes;
  std::vector<Instance> train;
  std::vector<Instance> validation;
  std::vector<Instance> test;
  SplitRatios ratios;
  std::uint64_t seed = 0;
};

enum class BinaryLabel : int { Harmless = 0, Harmful = 1 };

LabeledDataset load_dataset(const DatasetManifest& manifest);

/// Per class: shuffle, validation gets floor(v*k), train gets
/// floor(t*k + frac(v*k)), test the rest. Every subset lands within one
/// instance of its exact share.
SplitBundle stratified_split(const LabeledDataset& dataset, SplitRatios ratios, std::uint64_t seed);

/// Per-class (train, validation, test) sizes for a class of k instances.
struct SplitSizes {
  std::size_t train, validation, test;
};
SplitSizes split_sizes(std::size_t k, const SplitRatios& ratios);

/// Brings every class up to the majority count by drawing its own
/// instances with replacement. Originals are kept, additions appended.
std::vector<Instance> oversample(std::span<const Instance> train, std::size_t num_classes, std::uint64_t seed);

BinaryLabel binarize(std::span<const ClassDef> classes, int label);
BinaryLabel binarize(const DatasetManifest& manifest, std::string_view label);
std::vector<int> binarize_labels(std::span<const ClassDef> classes, std::span<const Instance> instances);

}  // namespace hatemtl::data
