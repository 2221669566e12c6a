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

#include "hatemtl/textnorm.hpp"

#include <regex>
#include <vector>

namespace hatemtl::text {

namespace {

// Lenient UTF-8 decoding: invalid bytes become U+FFFD.
std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(char32_t{0xFFFD});
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;  // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

bool is_space(char32_t cp) {
  return cp == U' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000;
}

// Variation selectors and ZWJ glue emoji sequences together.
bool is_emoji_joiner(char32_t cp) { return cp == 0xFE0E || cp == 0xFE0F || cp == 0x200D; }

bool starts_with_rt(const std::u32string& s, std::size_t& len) {
  if (s.size() < 2 || s[0] != U'r' || s[1] != U't') return false;
  if (s.size() > 2 && !is_space(s[2]) && !is_punctuation(s[2])) return false;
  len = 2;
  return true;
}

std::u32string trim_left(std::u32string s) {
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  return s.substr(i);
}

}  // namespace

bool is_emoji(char32_t cp) {
  return (cp >= 0x1F600 && cp <= 0x1F64F) || (cp >= 0x1F300 && cp <= 0x1F5FF) ||
         (cp >= 0x1F680 && cp <= 0x1F6FF) || (cp >= 0x1F900 && cp <= 0x1F9FF);
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    const bool ascii_punct = (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
                             (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    return ascii_punct && cp != U'@' && cp != U'#' && cp != U'_';
  }
  return (cp >= 0xA1 && cp <= 0xBF && cp != 0xAA && cp != 0xB5 && cp != 0xBA) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) || (cp >= 0x3001 && cp <= 0x3003) ||
         cp == 0xFFFD;
}

std::optional<std::string> normalize(std::string_view input) {
  std::u32string s = decode(input);
  for (auto& cp : s) cp = to_lower(cp);

  // URLs: delete every whitespace-delimited token carrying a scheme:// or
  // starting with www.
  {
    static const std::regex url_pattern(R"((^|[^a-z0-9+.\-])[a-z][a-z0-9+.\-]*://|^www\.)");
    std::u32string kept;
    std::size_t i = 0;
    while (i < s.size()) {
      if (is_space(s[i])) {
        kept.push_back(s[i++]);
        continue;
      }
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j])) ++j;
      const std::u32string_view token(s.data() + i, j - i);
      const std::string utf8 = encode(token);
      const bool maybe_url = utf8.find("://") != std::string::npos || utf8.starts_with("www.");
      if (!maybe_url || !std::regex_search(utf8, url_pattern)) kept.append(token);
      i = j;
    }
    s = std::move(kept);
  }

  {
    std::u32string kept;
    bool after_emoji = false;
    for (char32_t cp : s) {
      if (is_emoji(cp)) {
        after_emoji = true;
      } else if (after_emoji && is_emoji_joiner(cp)) {
        // dropped with its emoji
      } else {
        after_emoji = false;
        kept.push_back(cp);
      }
    }
    s = std::move(kept);
  }

  s = trim_left(std::move(s));
  for (std::size_t len = 0; starts_with_rt(s, len);) s = trim_left(s.substr(len));

  std::vector<std::u32string> tokens;
  std::u32string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t cp = s[i];
    if (is_space(cp)) {
      flush();
    } else if (is_punctuation(cp)) {
      flush();
      tokens.emplace_back(1, cp);
      while (i + 1 < s.size() && s[i + 1] == cp) ++i;
    } else {
      word.push_back(cp);
    }
  }
  flush();

  if (tokens.empty()) return std::nullopt;
  std::string out;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (t) out.push_back(' ');
    out += encode(tokens[t]);
  }
  return out;
}

}  // namespace hatemtl::text
