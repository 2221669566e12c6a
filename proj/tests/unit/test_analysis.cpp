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

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "hatemtl/analysis.hpp"
#include "hatemtl/error.hpp"
#include "hatemtl/timeutil.hpp"

using namespace hatemtl;
using namespace std::chrono;
using analysis::Post;
using analysis::TermProfile;
using data::BinaryLabel;

namespace {

using testing::fixture_30;
using testing::oracle_granger_f;

TermProfile profile(std::map<std::string, double> f) {
  TermProfile p;
  p.freq = std::move(f);
  return p;
}

Post post(const std::string& when, bool harmful, const std::string& author = "a") {
  return {timeutil::parse(when), harmful ? BinaryLabel::Harmful : BinaryLabel::Harmless, author};
}

sys_days ymd(int y, unsigned m, unsigned d = 1) { return sys_days(year{y} / month{m} / day{d}); }

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("term profile examples") {
    const std::vector<std::string> texts{"a a b"};
    const auto p = analysis::profile_of_texts(texts);
    CHECK(p.tokens == 3);
    CHECK(std::abs(p.freq.at("a") - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(p.freq.at("b") - 1.0 / 3.0) < 1e-15);
    CHECK(analysis::profile_of_texts(std::vector<std::string>{}).freq.empty());
  }

  TEST_CASE("class slices partition and mix back into the whole") {
    data::LabeledDataset ds;
    ds.name = "five";
    ds.classes = {{"ok", false}, {"bad", true}, {"worse", true}};
    const std::vector<std::pair<std::string, int>> rows = {
        {"a b c", 0}, {"a a", 0}, {"b d", 1}, {"d d d e", 2}, {"a e", 1}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      data::Instance inst;
      inst.row = i;
      inst.text = rows[i].first;
      inst.label = rows[i].second;
      ds.instances.push_back(inst);
    }
    using analysis::ClassFilter;
    const auto all = analysis::term_profile(ds, ClassFilter::parse("ALL"));
    const auto bad = analysis::term_profile(ds, ClassFilter::parse("HARMFUL"));
    const auto good = analysis::term_profile(ds, ClassFilter::parse("HARMLESS"));
    CHECK(all.tokens == 13);
    CHECK(bad.tokens + good.tokens == all.tokens);
    // Hand counts: harmless a:3 b:1 c:1, harmful a:1 b:1 d:4 e:2.
    CHECK(std::abs(good.freq.at("a") - 3.0 / 5.0) < 1e-15);
    CHECK(std::abs(bad.freq.at("d") - 4.0 / 8.0) < 1e-15);
    for (const auto& [term, f] : all.freq) {
      const double mix = (good.freq.count(term) ? good.freq.at(term) * 5 : 0.0) +
                         (bad.freq.count(term) ? bad.freq.at(term) * 8 : 0.0);
      CHECK(std::abs(f - mix / 13.0) < 1e-12);
    }
    CHECK(analysis::term_profile(ds, ClassFilter::parse("worse")).tokens == 4);
    CHECK_THROWS_AS(analysis::term_profile(ds, ClassFilter::parse("missing")), ConfigError);
  }

  TEST_CASE("ruzicka examples") {
    const auto a = profile({{"x", 0.4}, {"y", 0.6}});
    const auto b = profile({{"x", 0.8}, {"y", 0.2}});
    CHECK(std::abs(analysis::ruzicka(a, b) - 0.6 / 1.4) < 1e-12);
    CHECK(std::abs(analysis::ruzicka(a, b) - 0.428571428571428571) < 1e-12);
    CHECK(analysis::ruzicka(a, a) == 1.0);
    CHECK(analysis::ruzicka(a, profile({{"z", 1.0}})) == 0.0);
    CHECK(analysis::ruzicka(profile({}), profile({})) == 0.0);
  }

  TEST_CASE("property: ruzicka is symmetric, bounded and 1 only on identity") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const auto random_profile = [&] {
        std::map<std::string, double> f;
        double total = 0;
        for (int t = 0; t < 8; ++t)
          if (rng() % 2) total += (f[std::string(1, char('a' + t))] = u(rng) + 0.01);
        for (auto& [k, v] : f) v /= total;
        return profile(f);
      };
      const auto p = random_profile(), q = random_profile();
      const double s = analysis::ruzicka(p, q);
      CHECK(s == analysis::ruzicka(q, p));
      CHECK((s >= 0.0 && s <= 1.0));
      if (!p.freq.empty()) CHECK(analysis::ruzicka(p, p) == 1.0);
      if (p.freq != q.freq) CHECK(s < 1.0);
    }
  }

  TEST_CASE("monthly series examples") {
    const std::vector<Post> three{post("2020-01-03", true), post("2020-01-20", true), post("2020-01-31T23:59:59Z", true)};
    const auto s = analysis::monthly_series(three, "a");
    CHECK(s.periods == std::vector<sys_days>{ymd(2020, 1)});
    CHECK(s.counts == std::vector<double>{3});

    const std::vector<Post> gap{post("2020-01-10", true), post("2020-03-02", true), post("2020-02-10", false, "b")};
    const auto g = analysis::monthly_series(gap, "a");
    CHECK(g.periods == std::vector<sys_days>{ymd(2020, 1), ymd(2020, 2), ymd(2020, 3)});
    CHECK(g.counts == std::vector<double>{1, 0, 1});

    const std::vector<Post> quiet{post("2019-11-01", false), post("2020-02-01", false)};
    const auto q = analysis::monthly_series(quiet, "");
    CHECK(q.counts == std::vector<double>{0, 0, 0, 0});

    const auto by = analysis::series_by_author(gap);
    CHECK(by.size() == 2);
    CHECK(by.at("b").counts == std::vector<double>{0});
  }

  TEST_CASE("bucket boundaries") {
    const auto t = timeutil::parse("2021-03-17T10:00:00Z");  // a Wednesday
    CHECK(analysis::bucket_start(t, analysis::Bucket::Month) == ymd(2021, 3));
    CHECK(analysis::bucket_start(t, analysis::Bucket::Week) == ymd(2021, 3, 15));
    CHECK(analysis::bucket_start(t, analysis::Bucket::Day) == ymd(2021, 3, 17));
    CHECK(analysis::next_bucket(ymd(2020, 12), analysis::Bucket::Month) == ymd(2021, 1));
    CHECK(analysis::parse_bucket("week") == analysis::Bucket::Week);
    CHECK_THROWS_AS(analysis::parse_bucket("year"), ConfigError);
  }

  TEST_CASE("event window examples") {
    analysis::MonthlySeries s;
    const std::vector<double> counts{2, 1, 1, 1, 4, 1, 1, 2};
    for (unsigned m = 1; m <= counts.size(); ++m) s.periods.push_back(ymd(2020, m));
    s.counts = counts;
    const auto d = analysis::event_window_delta(s, ymd(2020, 5, 14));
    CHECK(d.before == 3);
    CHECK(d.after == 6);
    CHECK(d.delta == 3);

    analysis::MonthlySeries flat = s;
    flat.counts.assign(counts.size(), 5.0);
    CHECK(analysis::event_window_delta(flat, ymd(2020, 4)).delta == 0.0);
    const auto early = analysis::event_window_delta(s, ymd(2019, 12, 20));
    CHECK(early.before == 0.0);
    CHECK(early.after == 3.0);  // Dec (outside) + Jan + Feb
  }

  TEST_CASE("pearson examples") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6};
    std::vector<double> y;
    for (double v : x) y.push_back(2 * v + 1);
    CHECK(std::abs(analysis::pearson(x, y) - 1.0) < 1e-15);
    for (auto& v : y) v = -v;
    CHECK(std::abs(analysis::pearson(x, y) + 1.0) < 1e-15);
    // Hand value: sum dx*dy = 14.5, sum dx^2 = sum dy^2 = 17.5.
    const std::vector<double> z{2, 1, 4, 3, 6, 5};
    CHECK(std::abs(analysis::pearson(x, z) - 29.0 / 35.0) < 1e-12);

    const std::vector<double> flat(6, 2.0);
    CHECK_THROWS_AS(analysis::pearson(x, flat), UndefinedStatistic);
    CHECK_THROWS_AS(analysis::pearson(std::vector<double>{1}, std::vector<double>{1}), ContractViolation);
  }

  TEST_CASE("property: pearson ignores positive affine maps") {
    std::mt19937_64 rng(67);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> x(3 + rng() % 20), y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = d(rng);
        y[i] = 0.5 * x[i] + d(rng);
      }
      const double r = analysis::pearson(x, y);
      const double a = 0.1 + std::abs(d(rng)) * 3, b = d(rng) * 10;
      std::vector<double> x2;
      for (double v : x) x2.push_back(a * v + b);
      CHECK(std::abs(analysis::pearson(x2, y) - r) < 1e-12);
      CHECK(std::abs(analysis::pearson(y, x2) - r) < 1e-12);
    }
  }

  TEST_CASE("series alignment") {
    analysis::MonthlySeries a, b;
    for (unsigned m = 1; m <= 6; ++m) {
      a.periods.push_back(ymd(2020, m));
      a.counts.push_back(m);
    }
    for (unsigned m = 4; m <= 9; ++m) {
      b.periods.push_back(ymd(2020, m));
      b.counts.push_back(10 * m);
    }
    const auto p = analysis::align(a, b);
    CHECK(p.periods == std::vector<sys_days>{ymd(2020, 4), ymd(2020, 5), ymd(2020, 6)});
    CHECK(p.x == std::vector<double>{4, 5, 6});
    CHECK(p.y == std::vector<double>{40, 50, 60});
    b.bucket = analysis::Bucket::Week;
    CHECK_THROWS_AS(analysis::align(a, b), ContractViolation);
  }

  TEST_CASE("granger F matches the normal-equations oracle") {
    std::vector<double> x, y;
    fixture_30(x, y);
    const auto results = analysis::granger(x, y, 3);
    REQUIRE(results.size() == 3);
    for (const auto& r : results) {
      CAPTURE(r.lag);
      CHECK(r.sample_size == 30 - r.lag);
      CHECK(std::abs(r.f - oracle_granger_f(x, y, r.lag)) < 1e-6);
      CHECK((r.p_value >= 0.0 && r.p_value <= 1.0));
    }
    CHECK(results[0].p_value < 0.05);
  }

  TEST_CASE("perfectly lagged series are maximally significant") {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> d;
    std::vector<double> x(60), y(60, 0.0);
    for (auto& v : x) v = d(rng);
    for (std::size_t t = 1; t < 60; ++t) y[t] = x[t - 1];
    const auto r = analysis::granger(x, y, 1);
    CHECK(r[0].p_value < 1e-6);
  }

  TEST_CASE("independent noise rarely rejects the null") {
    std::size_t rejections = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> d;
      std::vector<double> x(200), y(200);
      for (auto& v : x) v = d(rng);
      for (auto& v : y) v = d(rng);
      rejections += analysis::granger(x, y, 1)[0].p_value < 0.05;
    }
    CHECK(rejections <= 10);
  }

  TEST_CASE("property: granger F ignores constant shifts") {
    std::mt19937_64 rng(73);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(40), y(40);
      for (auto& v : x) v = d(rng);
      for (std::size_t t = 0; t < 40; ++t) y[t] = d(rng) + (t ? 0.3 * x[t - 1] : 0.0);
      const auto base = analysis::granger(x, y, 2);
      std::vector<double> xs = x, ys = y;
      for (auto& v : xs) v += 7.5;
      for (auto& v : ys) v -= 3.25;
      const auto shifted = analysis::granger(xs, ys, 2);
      for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(std::abs(shifted[i].f - base[i].f) < 1e-8 * std::max(1.0, base[i].f));
    }
  }

  TEST_CASE("F upper tail against closed forms and reflection") {
    // F(2, d2) has survival function (1 + 2f/d2)^(-d2/2).
    for (double d2 : {3.0, 7.0, 20.0})
      for (double f : {0.1, 1.0, 2.5, 9.0})
        CHECK(std::abs(analysis::f_upper_tail(f, 2.0, d2) - std::pow(1 + 2 * f / d2, -d2 / 2)) < 1e-12);
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> ab(0.5, 20.0), fx(0.01, 50.0);
    for (int trial = 0; trial < 500; ++trial) {
      const double d1 = 2 * ab(rng), d2 = 2 * ab(rng), f = fx(rng);
      // I_x(a,b) + I_{1-x}(b,a) = 1, expressed through reciprocal F.
      CHECK(std::abs(analysis::f_upper_tail(f, d1, d2) + analysis::f_upper_tail(1.0 / f, d2, d1) - 1.0) < 1e-10);
    }
  }

  TEST_CASE("granger errors are distinct") {
    std::vector<double> x(8, 0.0), y(8);
    for (std::size_t t = 0; t < 8; ++t) {
      x[t] = static_cast<double>(t % 3);
      y[t] = static_cast<double>((t * 7) % 5);
    }
    CHECK_THROWS_AS(analysis::granger(x, y, 3), UndefinedStatistic);
    std::vector<double> flat(30, 1.0), z(30);
    for (std::size_t t = 0; t < 30; ++t) z[t] = std::sin(static_cast<double>(t));
    CHECK_THROWS_AS(analysis::granger(flat, z, 1), SingularMatrix);
    CHECK_THROWS_AS(analysis::granger(flat, std::vector<double>(29, 0.0), 1), ContractViolation);
  }

  TEST_CASE("reading posts and events") {
    std::istringstream posts(
        R"({"timestamp":"2020-01-02","label":"harmful","author":"p1"})"
        "\n"
        R"({"timestamp":"2020-02-02T10:00:00Z","label":0,"author":"p2","text":"x"})"
        "\n"
        R"({"timestamp":"2020-03-02","label":true,"author":"p1"})"
        "\n");
    const auto ps = analysis::read_posts(posts);
    REQUIRE(ps.size() == 3);
    CHECK(ps[0].label == BinaryLabel::Harmful);
    CHECK(ps[1].label == BinaryLabel::Harmless);
    CHECK(ps[2].label == BinaryLabel::Harmful);
    std::istringstream bad(R"({"timestamp":"2020-01-02","label":"harmful"})");
    CHECK_THROWS_AS(analysis::read_posts(bad), LoadError);

    std::istringstream events("name,date\nelection,2020-11-03\n");
    const auto ev = analysis::read_events(events);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].date == ymd(2020, 11, 3));
  }
}
