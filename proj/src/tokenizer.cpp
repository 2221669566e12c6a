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

#include "hatemtl/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "hatemtl/error.hpp"

namespace hatemtl::tok {

namespace {

const char* const kReservedTokens[] = {"[PAD]", "[UNK]", "[CLS]"};

template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) fn(text.substr(i, j - i));
    i = j;
  }
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_.assign(std::begin(kReservedTokens), std::end(kReservedTokens));
  // Accept lists that already start with the reserved block (load path).
  std::size_t skip = 0;
  while (skip < kReserved && skip < tokens.size() && tokens[skip] == kReservedTokens[skip]) ++skip;
  if (skip != 0 && skip != kReserved) throw LoadError("vocabulary: partial reserved-token block");
  tokens_.insert(tokens_.end(), tokens.begin() + static_cast<std::ptrdiff_t>(skip), tokens.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw LoadError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing vocabulary file " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  if (tokens.size() < kReserved) throw LoadError("vocabulary file " + path.string() + " lacks reserved tokens");
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t max_size, std::size_t min_freq) {
  if (corpus.empty()) throw ConfigError("build_vocab: empty corpus");
  if (max_size < kReserved) throw ConfigError("build_vocab: max_size must be at least 3");
  if (min_freq == 0) throw ConfigError("build_vocab: min_freq must be positive");

  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& text : corpus) {
    for_each_token(text, [&](std::string_view t) {
      auto it = counts.find(t);
      if (it == counts.end()) counts.emplace(std::string(t), 1);
      else ++it->second;
    });
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    if (n < min_freq) continue;
    if (std::find(std::begin(kReservedTokens), std::end(kReservedTokens), token) != std::end(kReservedTokens)) continue;
    ranked.emplace_back(token, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size - kReserved) ranked.resize(max_size - kReserved);

  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [token, n] : ranked) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

TokenSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
  if (max_len == 0) throw ContractViolation("encode: max_len must be positive");
  TokenSequence seq;
  seq.ids.assign(max_len, kPad);
  seq.ids[0] = kCls;
  std::size_t n = 1;
  for_each_token(text, [&](std::string_view t) {
    if (n < max_len) seq.ids[n++] = vocab.id(t);
  });
  seq.true_length = n;
  return seq;
}

}  // namespace hatemtl::tok
