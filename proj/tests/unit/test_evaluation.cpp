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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <numeric>

#include <unistd.h>

#include "reda/evaluation.hpp"
#include "reda/io.hpp"

namespace reda {
namespace {

namespace fs = std::filesystem;

SyntheticData small_synthetic(double p = 0.9, std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.n_users = 60;
  spec.n_items = 300;
  spec.n_genres = 6;
  spec.items_per_user = 12;
  spec.genre_probability = p;
  spec.seed = seed;
  return generate_synthetic(spec);
}

HyperParams tiny_hyper(std::size_t k = 2, std::size_t m = 3) {
  HyperParams h;
  h.d = 6;
  h.k = k;
  h.m = m;
  h.s = 4;
  return h;
}

TEST(Metrics, HitRateBoundaries) {
  EXPECT_EQ(hit_rate(1, 10), 1);
  EXPECT_EQ(hit_rate(10, 10), 1);
  EXPECT_EQ(hit_rate(11, 10), 0);
}

TEST(Metrics, NdcgClosedForm) {
  EXPECT_EQ(ndcg_at(1, 10), 1.0);
  EXPECT_EQ(ndcg_at(3, 10), 0.5);
  EXPECT_EQ(ndcg_at(12, 10), 0.0);
  EXPECT_NEAR(ndcg_at(2, 10), 1.0 / std::log2(3.0), 1e-15);
}

TEST(HeldOutRank, TiesCountLowerIndices) {
  std::vector<Index> c{5, 9, 2, 7};
  EXPECT_EQ(held_out_rank(c, std::vector<double>{1, 1, 1, 1}), 2u);
  EXPECT_EQ(held_out_rank(c, std::vector<double>{3, 1, 2, 0}), 1u);
  EXPECT_EQ(held_out_rank(c, std::vector<double>{0, 1, 2, 3}), 4u);
}

TEST(Evaluate, PerfectScorer) {
  auto split = leave_one_out_split(small_synthetic().dataset, 100, 1);
  auto oracle = [&](Index user, std::span<const Index> candidates) {
    std::vector<double> s(candidates.size(), 0.0);
    for (std::size_t n = 0; n < candidates.size(); ++n) {
      if (candidates[n] == split.test[user]) s[n] = std::numeric_limits<double>::infinity();
    }
    return s;
  };
  auto report = evaluate_with(oracle, split, {});
  EXPECT_EQ(report.hr.at(10), 1.0);
  EXPECT_EQ(report.ndcg.at(10), 1.0);
  EXPECT_EQ(report.hr.at(5), 1.0);
}

TEST(Evaluate, DegenerateModelFollowsTieBreak) {
  auto split = leave_one_out_split(small_synthetic().dataset, 100, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(1, 1), 3, 0.5);
  auto report = evaluate(params, split, {});
  std::size_t hits = 0;
  for (const auto& u : report.per_user) {
    const auto& negs = split.eval_negatives[u.user];
    std::size_t lower = std::count_if(negs.begin(), negs.end(),
                                      [&](Index n) { return n < split.test[u.user]; });
    EXPECT_EQ(u.rank, lower + 1);
    hits += lower + 1 <= 10;
  }
  EXPECT_EQ(report.per_user.size(), 60u);
  EXPECT_DOUBLE_EQ(report.hr.at(10), static_cast<double>(hits) / 60.0);
}

TEST(Evaluate, TieBreakBaselineIsTenOverOneHundredOne) {
  // When the held-out index is uniform among the 101 candidates its tie-break
  // rank is uniform on 1..101.
  Dataset ds;
  ds.num_items = 400;
  for (int i = 0; i < 400; ++i) ds.items.insert("i" + std::to_string(i));
  Rng rng(11);
  for (int u = 0; u < 3000; ++u) {
    ds.users.insert("u" + std::to_string(u));
    std::vector<Index> pos;
    while (pos.size() < 3) {
      Index i = static_cast<Index>(uniform_index(rng, 400));
      if (std::find(pos.begin(), pos.end(), i) == pos.end()) pos.push_back(i);
    }
    ds.positives.push_back(pos);
  }
  ds.num_users = 3000;
  auto split = leave_one_out_split(ds, 100, 2);
  auto flat = [](Index, std::span<const Index> c) { return std::vector<double>(c.size(), 0.0); };
  auto report = evaluate_with(flat, split, {});
  EXPECT_NEAR(report.hr.at(10), 10.0 / 101.0, 0.02);
}

TEST(Evaluate, EmptyHistoryIsDegenerate) {
  auto split = leave_one_out_split(small_synthetic().dataset, 20, 1);
  split.train.positives[3].clear();
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  auto report = evaluate(params, split, {});
  EXPECT_EQ(report.degenerate_users, 1u);
  EXPECT_EQ(report.per_user[3].rank, 21u);
}

TEST(Evaluate, PureAndThreadIndependent) {
  auto split = leave_one_out_split(small_synthetic().dataset, 50, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  EvalOptions a;
  a.threads = 1;
  a.relation_ratio = 0.4;
  EvalOptions b = a;
  b.threads = 3;
  auto ra = evaluate(params, split, a), rb = evaluate(params, split, b);
  EXPECT_EQ(ra.hr, rb.hr);
  EXPECT_EQ(ra.ndcg, rb.ndcg);
  for (std::size_t u = 0; u < ra.per_user.size(); ++u) EXPECT_EQ(ra.per_user[u].rank, rb.per_user[u].rank);
}

TEST(Evaluate, MetricsMonotoneInCutoff) {
  auto split = leave_one_out_split(small_synthetic().dataset, 100, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  EvalOptions opts;
  opts.cutoffs = {1, 3, 5, 10, 20, 50};
  auto report = evaluate(params, split, opts);
  for (std::size_t n = 1; n < opts.cutoffs.size(); ++n) {
    EXPECT_LE(report.hr.at(opts.cutoffs[n - 1]), report.hr.at(opts.cutoffs[n]));
    EXPECT_LE(report.ndcg.at(opts.cutoffs[n - 1]), report.ndcg.at(opts.cutoffs[n]));
  }
  for (const auto& u : report.per_user) {
    EXPECT_GE(u.rank, 1u);
    EXPECT_LE(u.rank, 101u);
  }
}

EvalReport report_with_ranks(const std::vector<std::pair<std::size_t, std::size_t>>& history_rank) {
  EvalReport r;
  r.cutoffs = {5, 10};
  for (std::size_t n = 0; n < history_rank.size(); ++n) {
    r.per_user.push_back({static_cast<Index>(n), history_rank[n].first, history_rank[n].second});
  }
  auto all = summarize(r.per_user, r.cutoffs);
  r.hr = all.hr;
  r.ndcg = all.ndcg;
  return r;
}

TEST(Sparsity, BucketLabelsAndEmptyGroups) {
  auto r = report_with_ranks({{3, 1}, {12, 20}, {40, 4}, {9, 11}});
  std::vector<std::size_t> edges{10, 30};
  auto rows = sparsity_report(r, edges);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].label, "<10");
  EXPECT_EQ(rows[1].label, "10-29");
  EXPECT_EQ(rows[2].label, ">=30");
  EXPECT_EQ(rows[0].users, 2u);
  EXPECT_EQ(rows[0].hits.at(10), 1u);

  std::vector<std::size_t> far{100};
  auto sparse = sparsity_report(r, far);
  EXPECT_EQ(sparse[1].users, 0u);
  EXPECT_TRUE(sparse[1].hr.empty());
  // One populated bucket reproduces the global numbers.
  EXPECT_EQ(sparse[0].hr, r.hr);
  EXPECT_EQ(sparse[0].ndcg, r.ndcg);
}

TEST(Sparsity, WeightedBucketMeanIsGlobal) {
  auto split = leave_one_out_split(small_synthetic().dataset, 100, 1);
  // Vary history sizes so every bucket is populated.
  for (Index u = 0; u < split.num_users(); ++u) split.train.positives[u].resize(2 + u % 10);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  EvalOptions opts;
  opts.bucket_edges = {4, 7, 9};
  auto report = evaluate(params, split, opts);
  ASSERT_EQ(report.groups.size(), 4u);
  for (std::size_t cutoff : report.cutoffs) {
    std::size_t users = 0, hits = 0;
    for (const auto& g : report.groups) {
      EXPECT_GT(g.users, 0u);
      users += g.users;
      hits += g.hits.at(cutoff);
    }
    EXPECT_EQ(users, split.num_users());
    EXPECT_EQ(static_cast<double>(hits) / static_cast<double>(users), report.hr.at(cutoff));
  }
}

TEST(Sparsity, PermutationInvariant) {
  auto r = report_with_ranks({{3, 1}, {12, 20}, {40, 4}, {9, 11}, {25, 2}, {31, 7}, {5, 3}});
  auto shuffled = r;
  Rng rng(3);
  std::shuffle(shuffled.per_user.begin(), shuffled.per_user.end(), rng);
  std::vector<std::size_t> edges{10, 20, 30};
  auto a = sparsity_report(r, edges), b = sparsity_report(shuffled, edges);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    EXPECT_EQ(a[n].users, b[n].users);
    EXPECT_EQ(a[n].hits, b[n].hits);
    for (auto [c, v] : a[n].ndcg) EXPECT_NEAR(v, b[n].ndcg.at(c), 1e-15);
  }
}

TEST(Robustness, FullRatioEqualsEvaluate) {
  auto split = leave_one_out_split(small_synthetic().dataset, 50, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  auto plain = evaluate(params, split, {});
  std::vector<double> ratios{1.0};
  auto rows = robustness_sweep(params, split, ratios, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].hr, plain.hr);
  EXPECT_EQ(rows[0].ndcg, plain.ndcg);
}

TEST(Robustness, SweepIsDeterministic) {
  auto split = leave_one_out_split(small_synthetic().dataset, 50, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  std::vector<double> ratios{0.2, 0.6};
  auto a = robustness_sweep(params, split, ratios, {});
  auto b = robustness_sweep(params, split, ratios, {});
  for (std::size_t n = 0; n < a.size(); ++n) EXPECT_EQ(a[n].hr, b[n].hr);
}

TEST(Ablation, ParameterCountsAndMemoryGradients) {
  auto split = leave_one_out_split(small_synthetic().dataset, 20, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 256;
  std::vector<Ablation> variants{Ablation::kFull, Ablation::kNpil, Ablation::kNmal};
  auto rows = ablation_run(split, tiny_hyper(), cfg, {}, variants);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].item_parameter_count * 2, rows[0].item_parameter_count);
  EXPECT_EQ(rows[2].max_memory_grad_norm, 0.0);
  EXPECT_GT(rows[0].max_memory_grad_norm, 0.0);
}

TEST(Synthetic, PureGenres) {
  auto data = small_synthetic(1.0);
  for (Index u = 0; u < data.dataset.num_users; ++u) {
    for (Index i : data.dataset.positives[u]) EXPECT_EQ(data.item_genre[i], data.user_genre[u]);
  }
}

TEST(Synthetic, ReferenceSpecIsMostlyIntraGenre) {
  auto data = generate_synthetic({});
  double share = 0.0;
  for (Index u = 0; u < data.dataset.num_users; ++u) {
    const auto& pos = data.dataset.positives[u];
    EXPECT_EQ(pos.size(), 12u);
    std::size_t intra = std::count_if(pos.begin(), pos.end(),
                                      [&](Index i) { return data.item_genre[i] == data.user_genre[u]; });
    share += static_cast<double>(intra) / 12.0;
  }
  share /= static_cast<double>(data.dataset.num_users);
  EXPECT_GE(share, 0.85);
  EXPECT_EQ(data.dataset.num_users, 200u);
  EXPECT_EQ(data.dataset.num_items, 500u);
}

TEST(Synthetic, SeedReproducibleAndValidated) {
  EXPECT_EQ(small_synthetic().dataset, small_synthetic().dataset);
  EXPECT_NE(small_synthetic(0.9, 8).dataset, small_synthetic().dataset);
  SyntheticSpec bad;
  bad.items_per_user = 60;
  EXPECT_ANY_THROW(generate_synthetic(bad));
  bad = {};
  bad.n_items = 501;
  EXPECT_ANY_THROW(generate_synthetic(bad));
}

class ExportTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("reda_export_" + std::to_string(::getpid()));
    fs::remove_all(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

std::vector<std::vector<std::string>> data_rows(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  auto lines = split_string(read_file(path), '\n');
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (!lines[n].empty() && lines[n][0] != '#') rows.push_back(split_string(lines[n], '\t'));
  }
  return rows;
}

TEST_F(ExportTest, RowsSymmetryAndSoftmax) {
  auto split = leave_one_out_split(small_synthetic().dataset, 20, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3, 0.5);
  std::vector<RawPair> pairs{{"i1", "i7"}, {"i7", "i1"}, {"i2", "nope"}};
  std::vector<std::string> users{"u0", "u5", "ghost"};
  auto summary = export_embeddings(params, pairs, users, split, dir);
  EXPECT_EQ(summary.relations_written, 2u);
  EXPECT_EQ(summary.users_written, 2u);
  EXPECT_EQ(summary.skipped, 2u);

  auto rel = data_rows(dir / "relations.tsv");
  ASSERT_EQ(rel.size(), 2u);
  ASSERT_EQ(rel[0].size(), 2u + 6u);
  for (std::size_t c = 2; c < rel[0].size(); ++c) {
    EXPECT_NEAR(std::stod(rel[0][c]), std::stod(rel[1][c]), 1e-9);
  }
  for (const auto& row : data_rows(dir / "users.tsv")) {
    double sum = 0.0;
    for (std::size_t c = 1; c < row.size(); ++c) sum += std::stod(row[c]);
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST_F(ExportTest, EmptyPairListWritesHeaderOnly) {
  auto split = leave_one_out_split(small_synthetic().dataset, 20, 1);
  auto params = ModelParams::random(split.num_items(), tiny_hyper(), 3);
  export_embeddings(params, {}, {}, split, dir);
  EXPECT_EQ(read_file(dir / "relations.tsv"), "item_a\titem_b\td0\td1\td2\td3\td4\td5\n");
  EXPECT_TRUE(data_rows(dir / "users.tsv").empty());
}

}  // namespace
}  // namespace reda
