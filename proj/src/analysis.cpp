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

#include "hatemtl/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "hatemtl/csv.hpp"
#include "hatemtl/error.hpp"
#include "json.hpp"

namespace hatemtl::analysis {

using namespace std::chrono;

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

ClassFilter ClassFilter::parse(std::string_view s) {
  const auto u = upper(s);
  if (u == "HARMFUL") return {Kind::Harmful, {}};
  if (u == "HARMLESS") return {Kind::Harmless, {}};
  if (u == "ALL") return {Kind::All, {}};
  return {Kind::Named, std::string(s)};
}

std::string ClassFilter::to_string() const {
  switch (kind) {
    case Kind::Harmful: return "HARMFUL";
    case Kind::Harmless: return "HARMLESS";
    case Kind::All: return "ALL";
    case Kind::Named: return name;
  }
  return name;
}

TermProfile profile_of_texts(std::span<const std::string> texts, std::string slice) {
  TermProfile p;
  p.slice = std::move(slice);
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    std::istringstream in(text);
    for (std::string tok; in >> tok;) {
      ++counts[tok];
      ++p.tokens;
    }
  }
  for (const auto& [tok, n] : counts) p.freq[tok] = static_cast<double>(n) / static_cast<double>(p.tokens);
  return p;
}

TermProfile term_profile(const data::LabeledDataset& dataset, const ClassFilter& filter) {
  std::optional<int> named;
  if (filter.kind == ClassFilter::Kind::Named) {
    for (std::size_t c = 0; c < dataset.classes.size(); ++c)
      if (dataset.classes[c].name == filter.name) named = static_cast<int>(c);
    if (!named) throw ConfigError("dataset '" + dataset.name + "' has no class '" + filter.name + "'");
  }
  std::vector<std::string> texts;
  for (const auto& inst : dataset.instances) {
    const bool harmful = dataset.classes[static_cast<std::size_t>(inst.label)].harmful;
    bool keep = false;
    switch (filter.kind) {
      case ClassFilter::Kind::All: keep = true; break;
      case ClassFilter::Kind::Harmful: keep = harmful; break;
      case ClassFilter::Kind::Harmless: keep = !harmful; break;
      case ClassFilter::Kind::Named: keep = inst.label == *named; break;
    }
    if (keep) texts.push_back(inst.text);
  }
  return profile_of_texts(texts, dataset.name + ":" + filter.to_string());
}

double ruzicka(const TermProfile& a, const TermProfile& b) {
  double num = 0.0, den = 0.0;
  auto ia = a.freq.begin(), ib = b.freq.begin();
  while (ia != a.freq.end() || ib != b.freq.end()) {
    if (ib == b.freq.end() || (ia != a.freq.end() && ia->first < ib->first)) {
      den += ia->second;
      ++ia;
    } else if (ia == a.freq.end() || ib->first < ia->first) {
      den += ib->second;
      ++ib;
    } else {
      num += std::min(ia->second, ib->second);
      den += std::max(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return den == 0.0 ? 0.0 : num / den;
}

Bucket parse_bucket(std::string_view s) {
  const auto u = upper(s);
  if (u == "DAY") return Bucket::Day;
  if (u == "WEEK") return Bucket::Week;
  if (u == "MONTH") return Bucket::Month;
  throw ConfigError("unknown bucket width '" + std::string(s) + "'");
}

std::string to_string(Bucket b) {
  switch (b) {
    case Bucket::Day: return "day";
    case Bucket::Week: return "week";
    case Bucket::Month: return "month";
  }
  return "?";
}

sys_days bucket_start(timeutil::Instant t, Bucket b) {
  const auto day = floor<days>(t);
  switch (b) {
    case Bucket::Day: return day;
    case Bucket::Week: return day - days{weekday{day}.iso_encoding() - 1};
    case Bucket::Month: {
      const year_month_day ymd{day};
      return sys_days{ymd.year() / ymd.month() / 1};
    }
  }
  return day;
}

sys_days next_bucket(sys_days d, Bucket b) {
  switch (b) {
    case Bucket::Day: return d + days{1};
    case Bucket::Week: return d + days{7};
    case Bucket::Month: return sys_days{year_month_day{d} + months{1}};
  }
  return d;
}

namespace {

sys_days prev_bucket(sys_days d, Bucket b) {
  switch (b) {
    case Bucket::Day: return d - days{1};
    case Bucket::Week: return d - days{7};
    case Bucket::Month: return sys_days{year_month_day{d} - months{1}};
  }
  return d;
}

MonthlySeries build_series(std::span<const Post* const> posts, std::string author, Bucket bucket) {
  MonthlySeries s;
  s.author = std::move(author);
  s.bucket = bucket;
  if (posts.empty()) return s;
  std::map<sys_days, double> counts;
  sys_days first = sys_days::max(), last = sys_days::min();
  for (const auto* p : posts) {
    const auto start = bucket_start(p->timestamp, bucket);
    first = std::min(first, start);
    last = std::max(last, start);
    if (p->label == data::BinaryLabel::Harmful) counts[start] += 1.0;
  }
  for (auto d = first; d <= last; d = next_bucket(d, bucket)) {
    s.periods.push_back(d);
    const auto it = counts.find(d);
    s.counts.push_back(it == counts.end() ? 0.0 : it->second);
  }
  return s;
}

}  // namespace

MonthlySeries monthly_series(std::span<const Post> posts, std::string_view author, Bucket bucket) {
  std::vector<const Post*> selected;
  for (const auto& p : posts)
    if (author.empty() || p.author == author) selected.push_back(&p);
  return build_series(selected, std::string(author), bucket);
}

std::map<std::string, MonthlySeries> series_by_author(std::span<const Post> posts, Bucket bucket) {
  std::map<std::string, std::vector<const Post*>> groups;
  for (const auto& p : posts) groups[p.author].push_back(&p);
  std::map<std::string, MonthlySeries> out;
  for (const auto& [author, group] : groups) out.emplace(author, build_series(group, author, bucket));
  return out;
}

WindowDelta event_window_delta(const MonthlySeries& series, sys_days event, std::size_t window) {
  std::map<sys_days, double> lookup;
  for (std::size_t i = 0; i < series.periods.size(); ++i) lookup[series.periods[i]] = series.counts[i];
  const auto at = [&](sys_days d) {
    const auto it = lookup.find(d);
    return it == lookup.end() ? 0.0 : it->second;
  };
  WindowDelta w;
  const auto start = bucket_start(sys_seconds{event}, series.bucket);
  auto d = start;
  for (std::size_t k = 0; k < window; ++k, d = next_bucket(d, series.bucket)) w.after += at(d);
  d = start;
  for (std::size_t k = 0; k < window; ++k) {
    d = prev_bucket(d, series.bucket);
    w.before += at(d);
  }
  w.delta = w.after - w.before;
  return w;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("pearson: series lengths differ");
  if (x.size() < 2) throw ContractViolation("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson: a series has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AlignedPair align(const MonthlySeries& a, const MonthlySeries& b) {
  if (a.bucket != b.bucket) throw ContractViolation("align: series use different bucket widths");
  AlignedPair out;
  if (a.periods.empty() || b.periods.empty()) return out;
  const auto from = std::max(a.periods.front(), b.periods.front());
  const auto to = std::min(a.periods.back(), b.periods.back());
  std::size_t i = 0, j = 0;
  while (i < a.periods.size() && a.periods[i] < from) ++i;
  while (j < b.periods.size() && b.periods[j] < from) ++j;
  for (; i < a.periods.size() && j < b.periods.size() && a.periods[i] <= to; ++i, ++j) {
    out.periods.push_back(a.periods[i]);
    out.x.push_back(a.counts[i]);
    out.y.push_back(b.counts[j]);
  }
  return out;
}

namespace {

double residual_sum_of_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw SingularMatrix("granger: design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                         std::to_string(design.cols()) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(target);
  return (target - design * beta).squaredNorm();
}

}  // namespace

double f_upper_tail(double f, double d1, double d2) {
  if (!(d1 > 0 && d2 > 0)) throw ContractViolation("f_upper_tail: degrees of freedom must be positive");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

std::vector<GrangerResult> granger(std::span<const double> x, std::span<const double> y, std::size_t max_lag) {
  if (x.size() != y.size()) throw ContractViolation("granger: series lengths differ");
  if (max_lag == 0) throw ContractViolation("granger: max_lag must be at least 1");
  std::vector<GrangerResult> out;
  for (std::size_t p = 1; p <= max_lag; ++p) {
    if (x.size() <= p || x.size() - p < 2 * p + 2) {
      throw UndefinedStatistic("granger: " + std::to_string(x.size()) + " observations are too few for lag " +
                               std::to_string(p));
    }
    const std::size_t T = x.size() - p;
    const auto cols_r = static_cast<Eigen::Index>(1 + p);
    const auto cols_u = static_cast<Eigen::Index>(1 + 2 * p);
    Eigen::MatrixXd unrestricted(static_cast<Eigen::Index>(T), cols_u);
    Eigen::VectorXd target(static_cast<Eigen::Index>(T));
    for (std::size_t r = 0; r < T; ++r) {
      const std::size_t t = r + p;
      const auto row = static_cast<Eigen::Index>(r);
      target(row) = y[t];
      unrestricted(row, 0) = 1.0;
      for (std::size_t j = 1; j <= p; ++j) {
        unrestricted(row, static_cast<Eigen::Index>(j)) = y[t - j];
        unrestricted(row, static_cast<Eigen::Index>(p + j)) = x[t - j];
      }
    }
    const double rss_u = residual_sum_of_squares(unrestricted, target);
    const double rss_r = residual_sum_of_squares(unrestricted.leftCols(cols_r), target);
    const double d1 = static_cast<double>(p);
    const double d2 = static_cast<double>(T - 2 * p - 1);
    const double gain = std::max(0.0, rss_r - rss_u);
    GrangerResult g;
    g.lag = p;
    g.sample_size = T;
    g.f = rss_u > 0.0 ? (gain / d1) / (rss_u / d2) : (gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    g.p_value = f_upper_tail(g.f, d1, d2);
    out.push_back(g);
  }
  return out;
}

std::vector<Event> read_events(std::istream& in) {
  const auto table = csv::read_table(in);
  const auto name = table.column("name"), date = table.column("date");
  if (!name || !date) throw LoadError("events CSV needs columns name,date");
  std::vector<Event> out;
  for (const auto& row : table.rows) out.push_back({row[*name], floor<days>(timeutil::parse(row[*date]))});
  return out;
}

std::vector<Post> read_posts(std::istream& in) {
  std::vector<Post> out;
  std::string line;
  for (std::size_t row = 0; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "posts row " + std::to_string(row++) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(where + e.what());
    }
    if (!j.contains("timestamp") || !j.contains("label") || !j.contains("author"))
      throw LoadError(where + "timestamp, label and author are required");
    Post p;
    const auto& ts = j["timestamp"];
    p.timestamp = timeutil::parse(ts.is_string() ? ts.get<std::string>() : ts.dump());
    const auto& label = j["label"];
    bool harmful = false;
    if (label.is_boolean()) harmful = label.get<bool>();
    else if (label.is_number_integer()) harmful = label.get<long long>() != 0;
    else if (label.is_string()) {
      const auto u = upper(label.get<std::string>());
      if (u == "HARMFUL" || u == "1") harmful = true;
      else if (u != "HARMLESS" && u != "0") throw LoadError(where + "unknown label '" + label.get<std::string>() + "'");
    } else {
      throw LoadError(where + "label must be a string, number or boolean");
    }
    p.label = harmful ? data::BinaryLabel::Harmful : data::BinaryLabel::Harmless;
    const auto& author = j["author"];
    p.author = author.is_string() ? author.get<std::string>() : author.dump();
    out.push_back(std::move(p));
  }
  return out;
}

void write_series_csv(std::ostream& out, const std::map<std::string, MonthlySeries>& series) {
  csv::write_row(out, {"author", "period", "harmful_count"});
  for (const auto& [author, s] : series)
    for (std::size_t i = 0; i < s.periods.size(); ++i) {
      std::ostringstream count;
      count << s.counts[i];
      csv::write_row(out, {author, timeutil::format_date(s.periods[i]), count.str()});
    }
}

}  // namespace hatemtl::analysis
