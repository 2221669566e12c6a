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

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hatemtl::annot {

enum class Vote { Neutral = 0, Abuse = 1, Hate = 2 };
inline constexpr std::size_t kNumVotes = 3;

std::string to_string(Vote v);
/// Accepts neutral/abuse/hate in any case, or 0/1/2.
Vote parse_vote(std::string_view s);

struct AnnotationRecord {
  std::string item;
  std::string worker;
  Vote vote = Vote::Neutral;
};

/// First letter: neutral-vs-problematic ties go to the problematic side (H)
/// or to neutral (L). Second letter: abuse-vs-hate ties go to hate (H) or
/// abuse (L). Naive is a 3-way plurality, lowest class index on ties.
enum class TieBreakStrategy { Naive, HH, HL, LH, LL };
inline constexpr std::array<TieBreakStrategy, 5> kAllStrategies = {
    TieBreakStrategy::Naive, TieBreakStrategy::HH, TieBreakStrategy::HL, TieBreakStrategy::LH, TieBreakStrategy::LL};

std::string to_string(TieBreakStrategy s);
TieBreakStrategy parse_strategy(std::string_view s);

struct VoteCounts {
  std::array<std::size_t, kNumVotes> n{};
  std::size_t total() const { return n[0] + n[1] + n[2]; }
  std::size_t operator[](Vote v) const { return n[static_cast<std::size_t>(v)]; }
};

struct AggregatedItem {
  std::string item;
  Vote label = Vote::Neutral;
  VoteCounts counts;
  // Votes on the winning side of neutral vs abuse+hate.
  std::size_t binary_consensus = 0;
  // Votes for the final label itself.
  std::size_t three_class_consensus = 0;
  bool stage1_tie = false;
  bool stage2_tie = false;
};

AggregatedItem resolve(std::string item, const VoteCounts& counts, TieBreakStrategy strategy);

/// One entry per item, ordered by item id. Duplicate (item, worker) pairs
/// are a contract violation.
std::vector<AggregatedItem> aggregate(std::span<const AnnotationRecord> records, TieBreakStrategy strategy);

/// Nominal alpha over the coincidence matrix; items with fewer than two
/// votes do not contribute.
double krippendorff_alpha(std::span<const AnnotationRecord> records);

struct WorkerStats {
  std::string worker;
  std::size_t items = 0;
  double agreement = 0.0;  // share of votes equal to the item's final label
  std::array<std::size_t, kNumVotes> distribution{};
  // alpha with the worker minus alpha without; NaN if either is undefined.
  double alpha_delta = 0.0;
};

/// Sorted by ascending agreement (worker id on ties), so suspects come first.
std::vector<WorkerStats> worker_report(std::span<const AnnotationRecord> records,
                                       std::span<const AggregatedItem> finals);

struct StrategyScore {
  TieBreakStrategy strategy = TieBreakStrategy::HL;
  double three_class_macro_f1 = 0.0;
  double binary_macro_f1 = 0.0;
};

std::vector<StrategyScore> compare_strategies(std::span<const AnnotationRecord> records,
                                              const std::map<std::string, Vote>& gold);

enum class ConsensusMode { Binary, ThreeClass };

struct ConsensusHistogram {
  ConsensusMode mode = ConsensusMode::ThreeClass;
  std::vector<std::string> columns;  // final-label columns
  // rows[c - 1][label]: items whose winning label got c votes.
  std::vector<std::vector<std::size_t>> rows;
  std::size_t total() const;
};

ConsensusHistogram consensus_histogram(std::span<const AggregatedItem> items, ConsensusMode mode);
double mean_consensus(std::span<const AggregatedItem> items, ConsensusMode mode);

/// CSV with header item_id,worker_id,vote.
std::vector<AnnotationRecord> read_records(std::istream& in);
/// CSV with header item_id,label.
std::map<std::string, Vote> read_gold(std::istream& in);

void write_aggregated_csv(std::ostream& out, std::span<const AggregatedItem> items);
void write_workers_csv(std::ostream& out, std::span<const WorkerStats> workers);
void write_compare_csv(std::ostream& out, std::span<const StrategyScore> scores);
void write_histogram_csv(std::ostream& out, const ConsensusHistogram& h);

}  // namespace hatemtl::annot
