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

#include "hatemtl/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "hatemtl/csv.hpp"
#include "hatemtl/error.hpp"
#include "hatemtl/metrics.hpp"

namespace hatemtl::annot {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

std::size_t idx(Vote v) { return static_cast<std::size_t>(v); }

bool problematic(Vote v) { return v != Vote::Neutral; }

std::map<std::string, VoteCounts> count_votes(std::span<const AnnotationRecord> records) {
  std::set<std::pair<std::string_view, std::string_view>> pairs;
  std::map<std::string, VoteCounts> counts;
  for (const auto& r : records) {
    if (!pairs.emplace(r.item, r.worker).second)
      throw ContractViolation("worker '" + r.worker + "' voted twice on item '" + r.item + "'");
    ++counts[r.item].n[idx(r.vote)];
  }
  return counts;
}

}  // namespace

std::string to_string(Vote v) {
  switch (v) {
    case Vote::Neutral: return "neutral";
    case Vote::Abuse: return "abuse";
    case Vote::Hate: return "hate";
  }
  return "?";
}

Vote parse_vote(std::string_view s) {
  const auto l = lower(s);
  if (l == "neutral" || l == "0") return Vote::Neutral;
  if (l == "abuse" || l == "1") return Vote::Abuse;
  if (l == "hate" || l == "2") return Vote::Hate;
  throw LoadError("unknown vote '" + std::string(s) + "'");
}

std::string to_string(TieBreakStrategy s) {
  switch (s) {
    case TieBreakStrategy::Naive: return "NAIVE";
    case TieBreakStrategy::HH: return "HH";
    case TieBreakStrategy::HL: return "HL";
    case TieBreakStrategy::LH: return "LH";
    case TieBreakStrategy::LL: return "LL";
  }
  return "?";
}

TieBreakStrategy parse_strategy(std::string_view s) {
  for (auto strategy : kAllStrategies)
    if (lower(to_string(strategy)) == lower(s)) return strategy;
  throw ConfigError("unknown tie-break strategy '" + std::string(s) + "'");
}

AggregatedItem resolve(std::string item, const VoteCounts& counts, TieBreakStrategy strategy) {
  if (counts.total() == 0) throw ContractViolation("item '" + item + "' has no votes");
  AggregatedItem out;
  out.item = std::move(item);
  out.counts = counts;
  const auto neutral = counts[Vote::Neutral];
  const auto abuse = counts[Vote::Abuse];
  const auto hate = counts[Vote::Hate];

  if (strategy == TieBreakStrategy::Naive) {
    const auto best = std::max({neutral, abuse, hate});
    out.label = neutral == best ? Vote::Neutral : abuse == best ? Vote::Abuse : Vote::Hate;
    out.stage1_tie = neutral == abuse + hate;
    out.stage2_tie = abuse == hate;
  } else {
    const bool high1 = strategy == TieBreakStrategy::HH || strategy == TieBreakStrategy::HL;
    const bool high2 = strategy == TieBreakStrategy::HH || strategy == TieBreakStrategy::LH;
    out.stage1_tie = neutral == abuse + hate;
    const bool is_problematic = out.stage1_tie ? high1 : abuse + hate > neutral;
    if (!is_problematic) {
      out.label = Vote::Neutral;
    } else {
      out.stage2_tie = abuse == hate;
      out.label = out.stage2_tie ? (high2 ? Vote::Hate : Vote::Abuse) : (hate > abuse ? Vote::Hate : Vote::Abuse);
    }
  }
  out.three_class_consensus = counts[out.label];
  out.binary_consensus = problematic(out.label) ? abuse + hate : neutral;
  return out;
}

std::vector<AggregatedItem> aggregate(std::span<const AnnotationRecord> records, TieBreakStrategy strategy) {
  std::vector<AggregatedItem> out;
  for (const auto& [item, counts] : count_votes(records)) out.push_back(resolve(item, counts, strategy));
  return out;
}

double krippendorff_alpha(std::span<const AnnotationRecord> records) {
  std::array<std::array<double, kNumVotes>, kNumVotes> o{};
  std::size_t eligible = 0;
  for (const auto& [item, counts] : count_votes(records)) {
    const auto m = counts.total();
    if (m < 2) continue;
    ++eligible;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t c = 0; c < kNumVotes; ++c)
      for (std::size_t k = 0; k < kNumVotes; ++k) {
        const double others = static_cast<double>(counts.n[k]) - (c == k ? 1.0 : 0.0);
        o[c][k] += static_cast<double>(counts.n[c]) * others * w;
      }
  }
  if (eligible == 0) throw UndefinedStatistic("alpha is undefined: no item has two or more votes");

  std::array<double, kNumVotes> nc{};
  double n = 0.0, disagree = 0.0;
  for (std::size_t c = 0; c < kNumVotes; ++c)
    for (std::size_t k = 0; k < kNumVotes; ++k) {
      nc[c] += o[c][k];
      if (c != k) disagree += o[c][k];
    }
  for (double v : nc) n += v;
  if (disagree == 0.0) return 1.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < kNumVotes; ++c)
    for (std::size_t k = 0; k < kNumVotes; ++k)
      if (c != k) expected += nc[c] * nc[k];
  const double d_o = disagree / n;
  const double d_e = expected / (n * (n - 1.0));
  return 1.0 - d_o / d_e;
}

std::vector<WorkerStats> worker_report(std::span<const AnnotationRecord> records,
                                       std::span<const AggregatedItem> finals) {
  std::map<std::string_view, Vote> final_label;
  for (const auto& f : finals) final_label[f.item] = f.label;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto alpha_or_nan = [&](std::span<const AnnotationRecord> rs) {
    try {
      return krippendorff_alpha(rs);
    } catch (const UndefinedStatistic&) {
      return nan;
    }
  };
  const double alpha_all = alpha_or_nan(records);

  std::map<std::string, WorkerStats> by_worker;
  std::map<std::string, std::size_t> matches;
  for (const auto& r : records) {
    const auto it = final_label.find(r.item);
    if (it == final_label.end()) throw ContractViolation("no final label for item '" + r.item + "'");
    auto& w = by_worker[r.worker];
    w.worker = r.worker;
    ++w.items;
    ++w.distribution[idx(r.vote)];
    if (r.vote == it->second) ++matches[r.worker];
  }

  std::vector<WorkerStats> out;
  for (auto& [name, w] : by_worker) {
    w.agreement = static_cast<double>(matches[name]) / static_cast<double>(w.items);
    std::vector<AnnotationRecord> rest;
    for (const auto& r : records)
      if (r.worker != name) rest.push_back(r);
    w.alpha_delta = alpha_all - alpha_or_nan(rest);
    out.push_back(std::move(w));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WorkerStats& a, const WorkerStats& b) { return a.agreement < b.agreement; });
  return out;
}

std::vector<StrategyScore> compare_strategies(std::span<const AnnotationRecord> records,
                                              const std::map<std::string, Vote>& gold) {
  std::vector<StrategyScore> out;
  for (auto strategy : kAllStrategies) {
    const auto items = aggregate(records, strategy);
    std::vector<int> g3, p3, g2, p2;
    for (const auto& item : items) {
      const auto it = gold.find(item.item);
      if (it == gold.end()) throw ContractViolation("no gold label for item '" + item.item + "'");
      g3.push_back(static_cast<int>(it->second));
      p3.push_back(static_cast<int>(item.label));
      g2.push_back(problematic(it->second) ? 1 : 0);
      p2.push_back(problematic(item.label) ? 1 : 0);
    }
    out.push_back({strategy, eval::classification_report(g3, p3, kNumVotes).macro_f1,
                   eval::classification_report(g2, p2, 2).macro_f1});
  }
  return out;
}

std::size_t ConsensusHistogram::total() const {
  std::size_t t = 0;
  for (const auto& row : rows)
    for (auto v : row) t += v;
  return t;
}

ConsensusHistogram consensus_histogram(std::span<const AggregatedItem> items, ConsensusMode mode) {
  ConsensusHistogram h;
  h.mode = mode;
  h.columns = mode == ConsensusMode::Binary ? std::vector<std::string>{"harmless", "problematic"}
                                            : std::vector<std::string>{"neutral", "abuse", "hate"};
  std::size_t max_votes = 0;
  for (const auto& item : items) max_votes = std::max(max_votes, item.counts.total());
  h.rows.assign(max_votes, std::vector<std::size_t>(h.columns.size(), 0));
  for (const auto& item : items) {
    const bool binary = mode == ConsensusMode::Binary;
    const auto consensus = binary ? item.binary_consensus : item.three_class_consensus;
    const auto column = binary ? (problematic(item.label) ? 1 : 0) : idx(item.label);
    ++h.rows[consensus - 1][column];
  }
  return h;
}

double mean_consensus(std::span<const AggregatedItem> items, ConsensusMode mode) {
  if (items.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& item : items)
    sum += static_cast<double>(mode == ConsensusMode::Binary ? item.binary_consensus : item.three_class_consensus);
  return sum / static_cast<double>(items.size());
}

std::vector<AnnotationRecord> read_records(std::istream& in) {
  const auto table = csv::read_table(in);
  const auto col = [&](std::string_view name) {
    const auto c = table.column(name);
    if (!c) throw LoadError("annotation CSV has no column '" + std::string(name) + "'");
    return *c;
  };
  const auto item = col("item_id"), worker = col("worker_id"), vote = col("vote");
  std::vector<AnnotationRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      out.push_back({row[item], row[worker], parse_vote(row[vote])});
    } catch (const LoadError& e) {
      throw LoadError("annotation CSV row " + std::to_string(r) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, Vote> read_gold(std::istream& in) {
  const auto table = csv::read_table(in);
  const auto item = table.column("item_id"), label = table.column("label");
  if (!item || !label) throw LoadError("gold CSV needs columns item_id,label");
  std::map<std::string, Vote> out;
  for (const auto& row : table.rows) out[row[*item]] = parse_vote(row[*label]);
  return out;
}

void write_aggregated_csv(std::ostream& out, std::span<const AggregatedItem> items) {
  csv::write_row(out, {"item_id", "label", "votes", "neutral", "abuse", "hate", "binary_consensus",
                       "three_class_consensus", "stage1_tie", "stage2_tie"});
  for (const auto& i : items) {
    csv::write_row(out, {i.item, to_string(i.label), std::to_string(i.counts.total()),
                         std::to_string(i.counts[Vote::Neutral]), std::to_string(i.counts[Vote::Abuse]),
                         std::to_string(i.counts[Vote::Hate]), std::to_string(i.binary_consensus),
                         std::to_string(i.three_class_consensus), i.stage1_tie ? "1" : "0", i.stage2_tie ? "1" : "0"});
  }
}

void write_workers_csv(std::ostream& out, std::span<const WorkerStats> workers) {
  csv::write_row(out, {"worker_id", "items", "agreement", "neutral", "abuse", "hate", "alpha_delta"});
  for (const auto& w : workers) {
    csv::write_row(out, {w.worker, std::to_string(w.items), fmt(w.agreement), std::to_string(w.distribution[0]),
                         std::to_string(w.distribution[1]), std::to_string(w.distribution[2]), fmt(w.alpha_delta)});
  }
}

void write_compare_csv(std::ostream& out, std::span<const StrategyScore> scores) {
  csv::write_row(out, {"strategy", "three_class_macro_f1", "binary_macro_f1"});
  for (const auto& s : scores)
    csv::write_row(out, {to_string(s.strategy), fmt(s.three_class_macro_f1), fmt(s.binary_macro_f1)});
}

void write_histogram_csv(std::ostream& out, const ConsensusHistogram& h) {
  std::vector<std::string> header{"mode", "consensus"};
  header.insert(header.end(), h.columns.begin(), h.columns.end());
  csv::write_row(out, header);
  for (std::size_t c = 0; c < h.rows.size(); ++c) {
    std::vector<std::string> row{h.mode == ConsensusMode::Binary ? "binary" : "three_class", std::to_string(c + 1)};
    for (auto v : h.rows[c]) row.push_back(std::to_string(v));
    csv::write_row(out, row);
  }
}

}  // namespace hatemtl::annot
