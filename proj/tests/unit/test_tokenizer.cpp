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

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "../support/synth.hpp"
#include "doctest.h"
#include "hatemtl/error.hpp"
#include "hatemtl/tokenizer.hpp"

using namespace hatemtl;
using tok::build_vocab;
using tok::encode;

namespace {

std::vector<std::string> random_corpus(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> lines(1, 20), words(0, 8), letter(0, 5);
  std::vector<std::string> corpus;
  for (int l = lines(rng); l > 0; --l) {
    std::string line;
    for (int w = words(rng); w > 0; --w) line += std::string(line.empty() ? "" : " ") + char('a' + letter(rng));
    corpus.push_back(line);
  }
  return corpus;
}

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("frequency ranking with lexicographic ties") {
    const std::vector<std::string> corpus{"a b", "a"};
    const auto v = build_vocab(corpus, 100, 1);
    CHECK(v.tokens() == std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "a", "b"});

    const std::vector<std::string> ties{"y x", "x y", "y x"};
    const auto t = build_vocab(ties, 100, 1);
    CHECK(t.id("x") < t.id("y"));
  }

  TEST_CASE("min_freq filters everything below threshold") {
    const std::vector<std::string> corpus{"a b"};
    CHECK(build_vocab(corpus, 100, 2).size() == 3);
  }

  TEST_CASE("max_size truncates after the reserved block") {
    const std::vector<std::string> corpus{"a a a b b c"};
    const auto v = build_vocab(corpus, 4, 1);
    CHECK(v.size() == 4);
    CHECK(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
  }

  TEST_CASE("configuration errors") {
    const std::vector<std::string> empty;
    CHECK_THROWS_AS(build_vocab(empty, 10, 1), ConfigError);
    const std::vector<std::string> corpus{"a"};
    CHECK_THROWS_AS(build_vocab(corpus, 2, 1), ConfigError);
    CHECK_THROWS_AS(build_vocab(corpus, 10, 0), ConfigError);
  }

  TEST_CASE("encode pads, maps OOV and truncates") {
    const std::vector<std::string> corpus{"a b", "a"};
    const auto v = build_vocab(corpus, 100, 1);
    const auto s = encode(v, "a b", 5);
    CHECK(s.ids == std::vector<int>{tok::kCls, v.id("a"), v.id("b"), tok::kPad, tok::kPad});
    CHECK(s.true_length == 3);

    const auto oov = encode(v, "zzz", 3);
    CHECK(oov.ids == std::vector<int>{tok::kCls, tok::kUnk, tok::kPad});
    CHECK(oov.true_length == 2);

    const auto longer = encode(v, "a b a b a b", 4);
    CHECK(longer.ids.size() == 4);
    CHECK(longer.true_length == 4);
    CHECK(longer.ids[3] == v.id("a"));
  }

  TEST_CASE("save and load round trip") {
    const auto dir = testing::scratch_dir("vocab");
    const std::vector<std::string> corpus{"the cat", "the dog", "ünïcode word"};
    const auto v = build_vocab(corpus, 100, 1);
    v.save(dir / "vocab.txt");
    CHECK(tok::Vocabulary::load(dir / "vocab.txt") == v);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("property: dense ids, no reserved collisions, bounded size") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const auto corpus = random_corpus(rng);
      const std::size_t max_size = 3 + rng() % 8;
      const std::size_t min_freq = 1 + rng() % 3;
      const auto v = build_vocab(corpus, max_size, min_freq);
      CHECK(v.size() <= max_size);
      CHECK(v.token(tok::kPad) == "[PAD]");
      CHECK(v.token(tok::kUnk) == "[UNK]");
      CHECK(v.token(tok::kCls) == "[CLS]");
      for (std::size_t id = 0; id < v.size(); ++id) CHECK(v.id(v.token(static_cast<int>(id))) == static_cast<int>(id));

      // Coverage monotonicity: lowering min_freq keeps every token (given room).
      const auto loose = build_vocab(corpus, 1000, 1);
      const auto strict = build_vocab(corpus, 1000, min_freq);
      for (const auto& t : strict.tokens()) CHECK(loose.contains(t));

      // Encoding contract and round-trip stability.
      for (const auto& line : corpus) {
        const std::size_t max_len = 1 + rng() % 6;
        const auto s = encode(v, line, max_len);
        CHECK(s == encode(v, line, max_len));
        REQUIRE(s.ids.size() == max_len);
        CHECK(s.ids[0] == tok::kCls);
        CHECK(s.true_length <= max_len);
        for (std::size_t i = 0; i < max_len; ++i) {
          CHECK(s.ids[i] < static_cast<int>(v.size()));
          if (i >= s.true_length) CHECK(s.ids[i] == tok::kPad);
        }
      }
    }
  }
}
