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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>

#include "../support/synth.hpp"
#include "doctest.h"
#include "hatemtl/data.hpp"
#include "hatemtl/error.hpp"
#include "hatemtl/timeutil.hpp"

using namespace hatemtl;
using data::ClassDef;
using data::Instance;
using data::LabeledDataset;

namespace {

data::DatasetManifest three_class_manifest(const std::filesystem::path& file) {
  data::DatasetManifest m;
  m.name = "toy";
  m.classes = {{"Neither", false}, {"Offensive", true}, {"Hate", true}};
  m.path = file;
  return m;
}

void write_lines(const std::filesystem::path& file, const std::vector<std::string>& lines) {
  std::ofstream out(file);
  for (const auto& l : lines) out << l << "\n";
}

LabeledDataset counts_dataset(const std::vector<std::size_t>& counts) {
  LabeledDataset ds;
  ds.name = "counts";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    ds.classes.push_back({"c" + std::to_string(c), c > 0});
    for (std::size_t i = 0; i < counts[c]; ++i) {
      Instance inst;
      inst.row = ds.instances.size();
      inst.text = "t" + std::to_string(inst.row);
      inst.label = static_cast<int>(c);
      ds.instances.push_back(inst);
    }
  }
  return ds;
}

std::vector<std::size_t> rows_of(const std::vector<Instance>& v) {
  std::vector<std::size_t> r;
  for (const auto& i : v) r.push_back(i.row);
  return r;
}

std::vector<std::size_t> per_class(const std::vector<Instance>& v, std::size_t classes) {
  std::vector<std::size_t> n(classes, 0);
  for (const auto& i : v) ++n[static_cast<std::size_t>(i.label)];
  return n;
}

data::DatasetManifest shipped(const std::string& name) {
  return data::DatasetManifest::load(std::filesystem::path(HATEMTL_SOURCE_DIR) / "manifests" / (name + ".json"));
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("loading a small JSONL file") {
    const auto dir = testing::scratch_dir("data-load");
    write_lines(dir / "toy.jsonl", {R"({"text":"Hello THERE","label":"Neither"})",
                                    R"({"text":"you idiot","label":"Offensive","author":"u1"})",
                                    R"({"text":"go away","label":"Hate","timestamp":"2020-03-04"})"});
    const auto ds = data::load_dataset(three_class_manifest(dir / "toy.jsonl"));
    REQUIRE(ds.instances.size() == 3);
    CHECK(ds.dropped == 0);
    CHECK(ds.instances[0].text == "hello there");
    CHECK(ds.instances[1].label == 1);
    CHECK(ds.instances[1].author == "u1");
    CHECK(ds.instances[2].row == 2);
    CHECK(ds.instances[2].timestamp == timeutil::parse("2020-03-04"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("unknown label names its row and value") {
    const auto dir = testing::scratch_dir("data-bad");
    write_lines(dir / "toy.jsonl",
                {R"({"text":"a","label":"Neither"})", R"({"text":"b","label":"spamm"})"});
    try {
      data::load_dataset(three_class_manifest(dir / "toy.jsonl"));
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 1") != std::string::npos);
      CHECK(msg.find("spamm") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("texts that normalize to nothing are dropped and counted") {
    const auto dir = testing::scratch_dir("data-drop");
    write_lines(dir / "toy.jsonl", {R"({"text":"fine","label":"Neither"})",
                                    R"({"text":"http://t.co/x","label":"Hate"})"});
    const auto ds = data::load_dataset(three_class_manifest(dir / "toy.jsonl"));
    CHECK(ds.instances.size() == 1);
    CHECK(ds.dropped == 1);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("missing file is an I/O error") {
    CHECK_THROWS_AS(data::load_dataset(three_class_manifest("/nonexistent/x.jsonl")), IoError);
  }

  TEST_CASE("CSV with declared columns") {
    const auto dir = testing::scratch_dir("data-csv");
    write_lines(dir / "toy.csv", {"id,body,cls,when", "1,\"a, quoted\",Hate,2021-01-01T10:00:00Z", "2,plain,Neither,"});
    auto m = three_class_manifest(dir / "toy.csv");
    m.format = data::Format::Csv;
    m.columns.text = "body";
    m.columns.label = "cls";
    m.columns.timestamp = "when";
    const auto ds = data::load_dataset(m);
    REQUIRE(ds.instances.size() == 2);
    CHECK(ds.instances[0].text == "a , quoted");
    CHECK(ds.instances[0].label == 2);
    CHECK(ds.instances[0].timestamp.has_value());
    CHECK_FALSE(ds.instances[1].timestamp.has_value());
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("manifest validation") {
    data::DatasetManifest m = three_class_manifest("x");
    CHECK_NOTHROW(m.validate());
    m.classes = {{"a", false}, {"b", false}};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.classes = {{"a", true}};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.classes = {{"a", false}, {"a", true}};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    const auto back = data::DatasetManifest::from_json(three_class_manifest("x").to_json());
    CHECK(back.classes == three_class_manifest("x").classes);
  }

  TEST_CASE("split sizes examples") {
    const auto ten = data::split_sizes(10, {});
    CHECK(ten.train == 8);
    CHECK(ten.validation == 1);
    CHECK(ten.test == 1);
    const auto twenty_five = data::split_sizes(25, {});
    CHECK(twenty_five.train == 20);
    CHECK(twenty_five.validation == 2);
    CHECK(twenty_five.test == 3);
  }

  TEST_CASE("property: split sizes stay within one of the exact share") {
    for (std::size_t k = 3; k < 2000; ++k) {
      const auto s = data::split_sizes(k, {});
      CAPTURE(k);
      CHECK(s.train + s.validation + s.test == k);
      CHECK(std::abs(static_cast<double>(s.train) - 0.8 * static_cast<double>(k)) <= 1.0);
      CHECK(std::abs(static_cast<double>(s.validation) - 0.1 * static_cast<double>(k)) <= 1.0);
      CHECK(std::abs(static_cast<double>(s.test) - 0.1 * static_cast<double>(k)) <= 1.0);
      CHECK(s.test >= 1);
    }
  }

  TEST_CASE("split requires three instances per class") {
    try {
      data::stratified_split(counts_dataset({10, 2}), {}, 1);
      FAIL("expected a split error");
    } catch (const SplitError& e) {
      CHECK(std::string(e.what()).find("c1") != std::string::npos);
    }
  }

  TEST_CASE("split is seed-deterministic") {
    const auto ds = counts_dataset({40, 17, 9});
    const auto a = data::stratified_split(ds, {}, 5), b = data::stratified_split(ds, {}, 5);
    CHECK(rows_of(a.train) == rows_of(b.train));
    CHECK(rows_of(a.test) == rows_of(b.test));
    CHECK(rows_of(a.train) != rows_of(data::stratified_split(ds, {}, 6).train));
  }

  TEST_CASE("property: split partitions and stratifies") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::size_t> counts(2 + rng() % 4);
      for (auto& c : counts) c = 3 + rng() % 80;
      const auto ds = counts_dataset(counts);
      const auto b = data::stratified_split(ds, {}, rng());
      std::multiset<std::size_t> all;
      for (const auto* part : {&b.train, &b.validation, &b.test})
        for (const auto& i : *part) all.insert(i.row);
      CHECK(all.size() == ds.instances.size());
      CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == ds.instances.size());

      const double n = static_cast<double>(ds.instances.size());
      for (const auto* part : {&b.train, &b.validation, &b.test}) {
        const auto pc = per_class(*part, counts.size());
        const double size = static_cast<double>(part->size());
        for (std::size_t c = 0; c < counts.size(); ++c) {
          const double gap = std::abs(static_cast<double>(pc[c]) / size - static_cast<double>(counts[c]) / n);
          // Each class rounds by less than one instance per subset.
          // Per-class rounding of under one instance bounds the gap by
          // max(1, C-1)/|subset|. The tighter 1/|subset| only holds for two
          // classes: {30, 9, 9} gives validation {3, 0, 0} under any floor rule.
          const double slack = std::max(1.0, static_cast<double>(counts.size()) - 1.0);
          CHECK(gap <= slack / size + 1e-12);
        }
      }
    }
  }

  TEST_CASE("oversampling example") {
    const auto ds = counts_dataset({10, 3});
    const auto out = data::oversample(ds.instances, 2, 9);
    CHECK(per_class(out, 2) == std::vector<std::size_t>{10, 10});
    CHECK(std::equal(ds.instances.begin(), ds.instances.end(), out.begin(),
                     [](const Instance& a, const Instance& b) { return a.row == b.row; }));
    for (std::size_t i = ds.instances.size(); i < out.size(); ++i) CHECK(out[i].row >= 10);
    CHECK(rows_of(out) == rows_of(data::oversample(ds.instances, 2, 9)));
    const auto balanced = counts_dataset({4, 4});
    CHECK(rows_of(data::oversample(balanced.instances, 2, 1)) == rows_of(balanced.instances));
  }

  TEST_CASE("property: oversampled classes all reach the majority count") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::size_t> counts(2 + rng() % 4);
      for (auto& c : counts) c = 1 + rng() % 50;
      const auto ds = counts_dataset(counts);
      const auto out = data::oversample(ds.instances, counts.size(), rng());
      const auto majority = *std::max_element(counts.begin(), counts.end());
      for (auto c : per_class(out, counts.size())) CHECK(c == majority);
      // Additions are copies of same-class originals.
      std::map<std::size_t, int> label_of;
      for (const auto& i : ds.instances) label_of[i.row] = i.label;
      for (const auto& i : out) CHECK(label_of.at(i.row) == i.label);
    }
  }

  TEST_CASE("binarization of shipped manifests") {
    CHECK(data::binarize(shipped("davidson"), "Offensive") == data::BinaryLabel::Harmful);
    CHECK(data::binarize(shipped("davidson"), "Neither") == data::BinaryLabel::Harmless);
    CHECK(data::binarize(shipped("mandl"), "Profane") == data::BinaryLabel::Harmless);
    CHECK(data::binarize(shipped("stormfront"), "relation") == data::BinaryLabel::Harmless);
    CHECK(data::binarize(shipped("stormfront"), "skip/unclear") == data::BinaryLabel::Harmless);
    CHECK_THROWS_AS(data::binarize(shipped("davidson"), "Profane"), ContractViolation);
  }

  TEST_CASE("property: binarization is total and constant per class") {
    for (const auto* name : {"davidson", "waseem", "reddit", "gab", "fox", "mandl", "stormfront", "hateval",
                             "pubfigs_l"}) {
      const auto m = shipped(name);
      CHECK_NOTHROW(m.validate());
      for (std::size_t c = 0; c < m.classes.size(); ++c) {
        const auto by_name = data::binarize(m, m.classes[c].name);
        CHECK(by_name == data::binarize(m.classes, static_cast<int>(c)));
        CHECK((by_name == data::BinaryLabel::Harmful) == m.classes[c].harmful);
      }
      CHECK_THROWS_AS(data::binarize(m.classes, static_cast<int>(m.classes.size())), ContractViolation);
    }
  }

  TEST_CASE("synthetic datasets round trip through the loader") {
    auto cfg = testing::binary_config("roundtrip", 120, 3);
    const auto ds = testing::generate(cfg);
    const auto dir = testing::scratch_dir("data-synth");
    const auto manifest_file = testing::write_dataset(ds, dir);
    const auto back = data::load_dataset(data::DatasetManifest::load(manifest_file));
    REQUIRE(back.instances.size() == ds.instances.size());
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
      CHECK(back.instances[i].text == ds.instances[i].text);
      CHECK(back.instances[i].label == ds.instances[i].label);
    }
    std::filesystem::remove_all(dir);
  }
}
