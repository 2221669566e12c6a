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

#include "hatemtl/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "hatemtl/error.hpp"

namespace hatemtl::timeutil {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}

}  // namespace

Instant parse(std::string_view s) {
  using namespace std::chrono;
  const auto fail = [&]() -> Instant { throw LoadError("invalid timestamp '" + std::string(s) + "'"); };
  if (s.empty()) return fail();

  if (s.find('-') == std::string_view::npos || s.front() == '-') {
    long long secs = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), secs);
    if (ec != std::errc() || p != s.data() + s.size()) return fail();
    return Instant(seconds(secs));
  }

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !read_int(s, 5, 2, mo) || s[7] != '-' ||
      !read_int(s, 8, 2, d))
    return fail();
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return fail();
  std::size_t pos = 10;
  seconds offset{0};
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return fail();
    if (!read_int(s, pos + 1, 2, h) || pos + 3 >= s.size() || s[pos + 3] != ':' || !read_int(s, pos + 4, 2, mi))
      return fail();
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_int(s, pos + 1, 2, sec)) return fail();
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      }
    }
    if (h > 23 || mi > 59 || sec > 60) return fail();
    if (pos < s.size()) {
      if (s[pos] == 'Z' && pos + 1 == s.size()) {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        int oh = 0, om = 0;
        if (!read_int(s, pos + 1, 2, oh)) return fail();
        std::size_t q = pos + 3;
        if (q < s.size() && s[q] == ':') ++q;
        if (!read_int(s, q, 2, om) || q + 2 != s.size()) return fail();
        offset = hours(oh) + minutes(om);
        if (s[pos] == '-') offset = -offset;
        pos = s.size();
      } else {
        return fail();
      }
    }
  }
  return Instant(sys_days(ymd).time_since_epoch() + hours(h) + minutes(mi) + seconds(sec) - offset);
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_iso(Instant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const hh_mm_ss hms{t - day_start};
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return format_date(day_start) + buf;
}

}  // namespace hatemtl::timeutil
