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

#include "reda/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "reda/error.hpp"

namespace reda {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

ColumnSchema ColumnSchema::parse(std::string_view columns, Delimiter delimiter) {
  ColumnSchema schema;
  schema.delimiter = delimiter;
  schema.columns.clear();
  bool user = false, item = false;
  for (auto name : split_fields(columns, ',')) {
    Column c;
    if (name == "user") {
      c = Column::kUser;
      if (user) throw ConfigError("duplicate column 'user'");
      user = true;
    } else if (name == "item") {
      c = Column::kItem;
      if (item) throw ConfigError("duplicate column 'item'");
      item = true;
    } else if (name == "rating") {
      c = Column::kRating;
    } else if (name == "timestamp") {
      c = Column::kTimestamp;
    } else if (name == "skip") {
      c = Column::kSkip;
    } else {
      throw ConfigError("unknown column '" + std::string(name) + "'");
    }
    schema.columns.push_back(c);
  }
  if (!user || !item) throw ConfigError("columns must include user and item");
  return schema;
}

bool ColumnSchema::has_rating() const {
  return std::find(columns.begin(), columns.end(), Column::kRating) != columns.end();
}

LoadResult parse_interactions(std::string_view text, const ColumnSchema& schema) {
  LoadResult result;
  char delim = schema.delimiter == Delimiter::kComma ? ',' : '\t';
  bool detected = schema.delimiter != Delimiter::kAuto;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    if (!detected) {
      // The first data line decides; tabs win over commas.
      delim = line.find('\t') != std::string_view::npos ? '\t' : ',';
      detected = true;
    }
    auto fields = split_fields(line, delim);
    if (fields.size() != schema.columns.size()) {
      result.errors.push_back({line_no, "expected " + std::to_string(schema.columns.size()) +
                                            " columns, found " + std::to_string(fields.size())});
      continue;
    }
    RawInteraction rec;
    std::string problem;
    for (std::size_t c = 0; c < fields.size() && problem.empty(); ++c) {
      auto f = fields[c];
      switch (schema.columns[c]) {
        case Column::kUser:
          rec.user_id = std::string(f);
          if (f.empty()) problem = "empty user id";
          break;
        case Column::kItem:
          rec.item_id = std::string(f);
          if (f.empty()) problem = "empty item id";
          break;
        case Column::kRating: {
          double r = 0.0;
          if (!parse_number(f, r)) problem = "bad rating '" + std::string(f) + "'";
          rec.rating = r;
          break;
        }
        case Column::kTimestamp: {
          std::int64_t t = 0;
          if (!parse_number(f, t)) problem = "bad timestamp '" + std::string(f) + "'";
          rec.timestamp = t;
          break;
        }
        case Column::kSkip:
          break;
      }
    }
    if (!problem.empty()) {
      result.errors.push_back({line_no, problem});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_interactions(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return parse_interactions(buf.str(), schema);
}

Index IdMap::insert(const std::string& raw) {
  auto [it, inserted] = index_.try_emplace(raw, static_cast<Index>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

std::optional<Index> IdMap::find(std::string_view raw) const {
  auto it = index_.find(std::string(raw));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::num_actions() const {
  std::size_t n = 0;
  for (const auto& p : positives) n += p.size();
  return n;
}

double Dataset::density() const {
  if (num_users == 0 || num_items == 0) return 0.0;
  return static_cast<double>(num_actions()) /
         (static_cast<double>(num_users) * static_cast<double>(num_items));
}

Dataset filter_dataset(std::span<const RawInteraction> raw, const FilterOptions& options) {
  struct Kept {
    std::size_t order;
    std::int64_t timestamp;
    std::string item;
  };
  // Positive, deduplicated interactions grouped by user in first-seen order.
  std::vector<std::string> user_order;
  std::unordered_map<std::string, std::vector<Kept>> by_user;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen;
  for (std::size_t n = 0; n < raw.size(); ++n) {
    const auto& rec = raw[n];
    if (rec.rating && !(*rec.rating > options.positive_threshold)) continue;
    if (!seen[rec.user_id].insert(rec.item_id).second) continue;
    auto [it, inserted] = by_user.try_emplace(rec.user_id);
    if (inserted) user_order.push_back(rec.user_id);
    it->second.push_back({n, rec.timestamp.value_or(0), rec.item_id});
  }

  // Dropping a user never changes another user's count, so a single pass
  // already reaches the fixed point of the min-action rule.
  Dataset ds;
  for (const auto& user : user_order) {
    auto& items = by_user[user];
    if (items.size() < options.min_actions) continue;
    std::stable_sort(items.begin(), items.end(), [](const Kept& a, const Kept& b) {
      return a.timestamp < b.timestamp;
    });
    ds.users.insert(user);
    auto& pos = ds.positives.emplace_back();
    pos.reserve(items.size());
    for (const auto& k : items) pos.push_back(ds.items.insert(k.item));
  }
  ds.num_users = ds.users.size();
  ds.num_items = ds.items.size();
  if (ds.num_users == 0) throw DataError("empty dataset after filtering");
  return ds;
}

LooSplit leave_one_out_split(const Dataset& ds, std::size_t n_neg, std::uint64_t seed,
                             HoldoutPolicy holdout) {
  LooSplit split;
  split.train.num_users = ds.num_users;
  split.train.num_items = ds.num_items;
  split.train.users = ds.users;
  split.train.items = ds.items;
  split.train.positives.resize(ds.num_users);
  split.test.resize(ds.num_users);
  split.eval_negatives.resize(ds.num_users);

  std::vector<char> interacted(ds.num_items, 0);
  std::vector<Index> pool;
  for (Index u = 0; u < ds.num_users; ++u) {
    const auto& pos = ds.positives[u];
    const std::string& name = ds.users.raw(u);
    if (pos.size() < 2) {
      throw DataError("user " + name + " has fewer than 2 positives; cannot hold one out");
    }
    std::size_t available = ds.num_items - pos.size();
    if (n_neg > available) {
      throw DataError("user " + name + " has only " + std::to_string(available) +
                      " non-interacted items, " + std::to_string(n_neg) + " negatives requested");
    }
    Rng rng = make_rng(seed, "split", u);
    std::size_t held = holdout == HoldoutPolicy::kLast ? pos.size() - 1
                                                        : uniform_index(rng, pos.size());
    split.test[u] = pos[held];
    auto& train = split.train.positives[u];
    train.reserve(pos.size() - 1);
    for (std::size_t n = 0; n < pos.size(); ++n) {
      if (n != held) train.push_back(pos[n]);
    }

    for (Index i : pos) interacted[i] = 1;
    pool.clear();
    for (Index i = 0; i < ds.num_items; ++i) {
      if (!interacted[i]) pool.push_back(i);
    }
    for (Index i : pos) interacted[i] = 0;
    // Partial Fisher-Yates: the first n_neg slots are a uniform sample
    // without replacement.
    for (std::size_t n = 0; n < n_neg; ++n) {
      std::size_t pick = n + uniform_index(rng, pool.size() - n);
      std::swap(pool[n], pool[pick]);
    }
    split.eval_negatives[u].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_neg));
  }
  return split;
}

TripletSampler::TripletSampler(const Dataset& train, NegativePairRule rule)
    : train_(&train), rule_(rule), sorted_(train.positives) {
  for (Index u = 0; u < sorted_.size(); ++u) {
    auto& s = sorted_[u];
    std::sort(s.begin(), s.end());
    if (s.size() >= 2) {
      eligible_.push_back(u);
      pair_count_ += s.size() * (s.size() - 1) / 2;
    }
  }
}

bool TripletSampler::is_positive(Index user, Index item) const {
  const auto& s = sorted_[user];
  return std::binary_search(s.begin(), s.end(), item);
}

ItemPair TripletSampler::random_pair(std::span<const Index> pool, Rng& rng) const {
  // Uniform ordered pair of distinct positions, hence a uniform unordered pair.
  std::size_t a = uniform_index(rng, pool.size());
  std::size_t b = uniform_index(rng, pool.size() - 1);
  if (b >= a) ++b;
  return {pool[a], pool[b]};
}

TrainingTriplet TripletSampler::sample(Index user, Rng& rng) const {
  if (user >= train_->num_users) throw DataError("user index out of range");
  const auto& pool = train_->positives[user];
  if (pool.size() < 2) throw DataError("no pairs for user " + train_->users.raw(user));

  TrainingTriplet t;
  t.user = user;
  t.target = random_pair(pool, rng);
  if (pool.size() == 2) {
    t.context = t.target;
  } else {
    do {
      t.context = random_pair(pool, rng);
    } while (t.context.same_unordered(t.target));
  }

  const std::size_t n_items = train_->num_items;
  const std::size_t n_pos = sorted_[user].size();
  if (rule_ == NegativePairRule::kNotBoth ? n_items <= n_pos : n_items < n_pos + 2) {
    throw DataError("no negative pair available for user " + train_->users.raw(user));
  }
  while (true) {
    Index i = static_cast<Index>(uniform_index(rng, n_items));
    Index j = static_cast<Index>(uniform_index(rng, n_items - 1));
    if (j >= i) ++j;
    bool pi = is_positive(user, i);
    bool pj = is_positive(user, j);
    bool ok = rule_ == NegativePairRule::kNotBoth ? !(pi && pj) : (!pi && !pj);
    if (ok) {
      t.negative = {i, j};
      break;
    }
  }
  return t;
}

std::vector<TrainingTriplet> TripletSampler::batch(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0) throw DataError("batch size must be at least 1");
  if (eligible_.empty()) throw DataError("no user has two or more training positives");
  std::vector<TrainingTriplet> out;
  out.reserve(batch_size);
  for (std::size_t n = 0; n < batch_size; ++n) {
    Index user = eligible_[uniform_index(rng, eligible_.size())];
    out.push_back(sample(user, rng));
  }
  return out;
}

}  // namespace reda
