// Copyright 2026 The REDA Authors.
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reda/random.hpp"

namespace reda {

using Index = std::uint32_t;

// ---------------------------------------------------------------------------
// Raw input
// ---------------------------------------------------------------------------

struct RawInteraction {
  std::string user_id;
  std::string item_id;
  std::optional<double> rating;  // absent: implicit positive
  std::optional<std::int64_t> timestamp;
};

enum class Delimiter { kAuto, kTab, kComma };

enum class Column { kUser, kItem, kRating, kTimestamp, kSkip };

// Column layout of an interaction file, e.g. "user,item,rating".
struct ColumnSchema {
  Delimiter delimiter = Delimiter::kAuto;
  std::vector<Column> columns{Column::kUser, Column::kItem, Column::kRating};

  // Parses a comma-separated list of column names drawn from
  // {user, item, rating, timestamp, skip}. user and item are required.
  static ColumnSchema parse(std::string_view columns,
                            Delimiter delimiter = Delimiter::kAuto);
  bool has_rating() const;
};

struct LineIssue {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<RawInteraction> records;
  std::vector<LineIssue> errors;
};

// Reads every data line of `path`. Lines starting with '#' and blank lines
// are ignored. Malformed lines are collected in `errors` with their line
// number rather than aborting the load. Throws IoError if unreadable.
LoadResult load_interactions(const std::filesystem::path& path,
                             const ColumnSchema& schema);
LoadResult parse_interactions(std::string_view text, const ColumnSchema& schema);

// ---------------------------------------------------------------------------
// Dense dataset
// ---------------------------------------------------------------------------

// Bidirectional raw id <-> dense index map.
class IdMap {
 public:
  Index insert(const std::string& raw);  // existing index if already present
  std::optional<Index> find(std::string_view raw) const;
  const std::string& raw(Index index) const { return raw_.at(index); }
  std::size_t size() const { return raw_.size(); }

  friend bool operator==(const IdMap& a, const IdMap& b) { return a.raw_ == b.raw_; }

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, Index> index_;
};

struct Dataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  // positives[u] is R_u^+, distinct items in interaction order.
  std::vector<std::vector<Index>> positives;
  IdMap users;
  IdMap items;

  std::size_t num_actions() const;
  double density() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct FilterOptions {
  double positive_threshold = 3.0;  // keep rating > threshold
  std::size_t min_actions = 6;      // keep users with >= min_actions positives
};

// Thresholds ratings, deduplicates (user, item) and drops users below
// `min_actions`, then reindexes users and items densely in order of first
// appearance. Throws DataError("empty dataset") when nothing survives.
Dataset filter_dataset(std::span<const RawInteraction> raw,
                       const FilterOptions& options = {});

// ---------------------------------------------------------------------------
// Leave-one-out split
// ---------------------------------------------------------------------------

enum class HoldoutPolicy { kRandom, kLast };

struct LooSplit {
  Dataset train;
  std::vector<Index> test;  // held-out item per user
  std::vector<std::vector<Index>> eval_negatives;

  std::size_t num_users() const { return train.num_users; }
  std::size_t num_items() const { return train.num_items; }

  friend bool operator==(const LooSplit&, const LooSplit&) = default;
};

// Holds out one positive per user and draws `n_neg` negatives uniformly
// without replacement from the items the user never interacted with.
LooSplit leave_one_out_split(const Dataset& ds, std::size_t n_neg,
                             std::uint64_t seed,
                             HoldoutPolicy holdout = HoldoutPolicy::kRandom);

// ---------------------------------------------------------------------------
// Training triplets
// ---------------------------------------------------------------------------

struct ItemPair {
  Index first = 0;
  Index second = 0;

  bool same_unordered(const ItemPair& o) const {
    return (first == o.first && second == o.second) ||
           (first == o.second && second == o.first);
  }
  friend bool operator==(const ItemPair&, const ItemPair&) = default;
};

struct TrainingTriplet {
  Index user = 0;
  ItemPair target;
  ItemPair context;
  ItemPair negative;

  friend bool operator==(const TrainingTriplet&, const TrainingTriplet&) = default;
};

// kNotBoth rejects a negative pair only when both items are positives of
// the user; kNeither additionally requires both items to be non-positives.
enum class NegativePairRule { kNotBoth, kNeither };

// Samples relation triplets from the training half of a split.
class TripletSampler {
 public:
  explicit TripletSampler(const Dataset& train,
                          NegativePairRule rule = NegativePairRule::kNotBoth);

  // Throws DataError("no pairs") when the user has < 2 train positives.
  TrainingTriplet sample(Index user, Rng& rng) const;

  // `batch_size` triplets with users drawn uniformly among eligible users.
  std::vector<TrainingTriplet> batch(std::size_t batch_size, Rng& rng) const;

  bool is_positive(Index user, Index item) const;
  std::span<const Index> eligible_users() const { return eligible_; }
  // Sum over eligible users of the number of unordered positive pairs.
  std::size_t eligible_pair_count() const { return pair_count_; }

 private:
  ItemPair random_pair(std::span<const Index> pool, Rng& rng) const;

  const Dataset* train_;
  NegativePairRule rule_;
  std::vector<std::vector<Index>> sorted_;  // per-user sorted positives
  std::vector<Index> eligible_;
  std::size_t pair_count_ = 0;
};

inline TrainingTriplet sample_triplet(const LooSplit& split, Index user, Rng& rng) {
  return TripletSampler(split.train).sample(user, rng);
}

inline std::vector<TrainingTriplet> batch_triplets(const LooSplit& split,
                                                   std::size_t batch_size,
                                                   Rng& rng) {
  return TripletSampler(split.train).batch(batch_size, rng);
}

}  // namespace reda
