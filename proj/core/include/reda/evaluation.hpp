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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reda/data.hpp"
#include "reda/model.hpp"
#include "reda/training.hpp"

namespace reda {

inline int hit_rate(std::size_t rank, std::size_t cutoff) { return rank <= cutoff ? 1 : 0; }

// Single-relevant-item nDCG: 1 / log2(rank + 1) inside the cutoff.
double ndcg_at(std::size_t rank, std::size_t cutoff);

struct EvalOptions {
  std::vector<std::size_t> cutoffs{5, 10};
  double relation_ratio = 1.0;
  bool ratio_on_embedding = true;  // subsample pairs in z_u
  bool ratio_on_score = true;      // subsample history terms in the score
  std::uint64_t seed = 42;         // drives ratio subsampling only
  std::size_t threads = 0;
  std::vector<std::size_t> bucket_edges{10, 20, 30};

  void validate() const;
};

struct UserResult {
  Index user = 0;
  std::size_t history_size = 0;
  std::size_t rank = 0;  // 1-based position of the held-out item
};

// Metrics for one group of users. `hits` keeps exact integer counts so
// group aggregates recombine without rounding.
struct MetricRow {
  std::string label;
  std::size_t users = 0;
  std::map<std::size_t, std::size_t> hits;
  std::map<std::size_t, double> hr;    // empty when users == 0
  std::map<std::size_t, double> ndcg;  // empty when users == 0
};

struct EvalReport {
  std::vector<std::size_t> cutoffs;
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;
  std::vector<UserResult> per_user;
  std::vector<MetricRow> groups;
  std::size_t degenerate_users = 0;
  std::string config_echo;
};

// Scores for `candidates` of one user (candidates[0] is the held-out item).
using CandidateScorer =
    std::function<std::vector<double>(Index user, std::span<const Index> candidates)>;

// Position of candidates[0] after sorting by descending score with ties by
// ascending item index.
std::size_t held_out_rank(std::span<const Index> candidates, std::span<const double> scores);

// Aggregates per-user ranks into global metrics over `cutoffs`.
MetricRow summarize(std::span<const UserResult> users, std::span<const std::size_t> cutoffs,
                    std::string label = "all");

EvalReport evaluate_with(const CandidateScorer& scorer, const LooSplit& split,
                         const EvalOptions& options);

EvalReport evaluate(const ModelParams& params, const LooSplit& split, const EvalOptions& options);

// Buckets users by training-history size. Edges {10, 30} give <10, 10-29, >=30.
std::vector<MetricRow> sparsity_report(const EvalReport& report,
                                       std::span<const std::size_t> bucket_edges);

struct SweepRow {
  double ratio = 1.0;
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;
};

std::vector<SweepRow> robustness_sweep(const ModelParams& params, const LooSplit& split,
                                       std::span<const double> ratios, const EvalOptions& options);

struct AblationRow {
  Ablation variant = Ablation::kFull;
  std::size_t item_parameter_count = 0;
  double final_loss = 0.0;
  double max_memory_grad_norm = 0.0;
  EvalReport report;
};

std::vector<AblationRow> ablation_run(const LooSplit& split, const HyperParams& hyper,
                                      const TrainConfig& train_config,
                                      const EvalOptions& eval_options,
                                      std::span<const Ablation> variants);

// ---------------------------------------------------------------------------
// Synthetic planted-genre data
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 500;
  std::size_t n_genres = 10;
  std::size_t items_per_user = 12;
  double genre_probability = 0.9;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<std::size_t> item_genre;  // genre of item i (contiguous blocks)
  std::vector<std::size_t> user_genre;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Embedding export
// ---------------------------------------------------------------------------

struct RawPair {
  std::string first;
  std::string second;
};

struct ExportSummary {
  std::size_t relations_written = 0;
  std::size_t users_written = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Writes relations.tsv (item_a, item_b, r_0..r_{d-1}) and users.tsv
// (user, softmax(z_u)_0..) into `out_dir`. Unknown raw ids are skipped with
// a warning. `header` lines are written as '#' comments.
ExportSummary export_embeddings(const ModelParams& params, std::span<const RawPair> pairs,
                                std::span<const std::string> users, const LooSplit& split,
                                const std::filesystem::path& out_dir,
                                const std::string& header = {});

}  // namespace reda
