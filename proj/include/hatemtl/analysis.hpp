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

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatemtl/data.hpp"
#include "hatemtl/timeutil.hpp"

namespace hatemtl::analysis {

/// Which instances of a dataset feed a term profile.
struct ClassFilter {
  enum class Kind { Harmful, Harmless, Named, All };
  Kind kind = Kind::All;
  std::string name;

  static ClassFilter parse(std::string_view s);  // HARMFUL, HARMLESS, ALL or a class name
  std::string to_string() const;
};

struct TermProfile {
  std::string slice;
  std::map<std::string, double> freq;  // relative frequencies, sum to 1 unless empty
  std::size_t tokens = 0;
};

/// Unigram profile over whitespace tokens of already normalized texts.
TermProfile profile_of_texts(std::span<const std::string> texts, std::string slice = {});
TermProfile term_profile(const data::LabeledDataset& dataset, const ClassFilter& filter);

/// Weighted Jaccard: sum of minima over sum of maxima; 0 when both are empty.
double ruzicka(const TermProfile& a, const TermProfile& b);

enum class Bucket { Day, Week, Month };
Bucket parse_bucket(std::string_view s);
std::string to_string(Bucket b);

/// Start of the UTC bucket containing t (weeks start on Monday).
std::chrono::sys_days bucket_start(timeutil::Instant t, Bucket b);
std::chrono::sys_days next_bucket(std::chrono::sys_days d, Bucket b);

struct Post {
  timeutil::Instant timestamp;
  data::BinaryLabel label = data::BinaryLabel::Harmless;
  std::string author;
};

struct MonthlySeries {
  std::string author;
  Bucket bucket = Bucket::Month;
  std::vector<std::chrono::sys_days> periods;  // consecutive buckets
  std::vector<double> counts;                  // harmful posts per bucket
};

/// Harmful-post counts per bucket for one author (every author when empty),
/// spanning the first to the last bucket with any post of that author.
MonthlySeries monthly_series(std::span<const Post> posts, std::string_view author, Bucket bucket = Bucket::Month);
std::map<std::string, MonthlySeries> series_by_author(std::span<const Post> posts, Bucket bucket = Bucket::Month);

struct WindowDelta {
  double before = 0.0;
  double after = 0.0;
  double delta = 0.0;
};

/// before: the `window` buckets strictly preceding the event's bucket;
/// after: the event's bucket and the window - 1 following it.
WindowDelta event_window_delta(const MonthlySeries& series, std::chrono::sys_days event, std::size_t window = 3);

double pearson(std::span<const double> x, std::span<const double> y);

struct AlignedPair {
  std::vector<std::chrono::sys_days> periods;
  std::vector<double> x;
  std::vector<double> y;
};

/// Restricts two series to the buckets where both are active.
AlignedPair align(const MonthlySeries& a, const MonthlySeries& b);

struct GrangerResult {
  std::size_t lag = 0;
  double f = 0.0;
  double p_value = 1.0;
  std::size_t sample_size = 0;  // T = len - lag
};

/// Does x help predict y? One result per lag in 1..max_lag.
std::vector<GrangerResult> granger(std::span<const double> x, std::span<const double> y, std::size_t max_lag);

/// Upper tail of the F(d1, d2) distribution at f.
double f_upper_tail(double f, double d1, double d2);

struct Event {
  std::string name;
  std::chrono::sys_days date;
};

/// CSV with header name,date.
std::vector<Event> read_events(std::istream& in);
/// JSONL with timestamp, label (harmful/harmless, 1/0 or true/false) and author.
std::vector<Post> read_posts(std::istream& in);

void write_series_csv(std::ostream& out, const std::map<std::string, MonthlySeries>& series);

}  // namespace hatemtl::analysis
