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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "reda/data.hpp"
#include "reda/random.hpp"
#include "reda/tensor.hpp"

namespace reda {

// kNpil drops the pair-wise interaction layer (one embedding per item);
// kNmal drops the memory attention layer (relation = weighted interactions).
enum class Ablation { kFull, kNpil, kNmal };

std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view s);

// How relation embeddings of a user's pairs are combined into z_u.
enum class Aggregation { kSum, kMean };

struct HyperParams {
  std::size_t d = 128;  // embedding dimension
  std::size_t k = 2;    // aspects per item
  std::size_t m = 20;   // memory slices
  std::size_t s = 10;   // weight-attention hidden size
  Ablation ablation = Ablation::kFull;
  Aggregation aggregation = Aggregation::kSum;

  // k after applying the ablation (kNpil forces a single aspect).
  std::size_t aspects() const { return ablation == Ablation::kNpil ? 1 : k; }
  std::size_t interactions() const { return aspects() * aspects(); }
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// All trainable tensors. Every tensor is a Matrix so optimizers and
// gradient checks can treat them uniformly.
struct ModelParams {
  HyperParams hyper;
  std::size_t num_items = 0;
  Matrix item_aspects;  // num_items x (k*d), row i holds p_i^1..p_i^k
  Matrix memory_keys;   // m x d
  Matrix memory_values; // m x d
  Matrix mlp_weight;    // s x d, maps interaction vectors to the hidden layer
  Matrix mlp_bias;      // 1 x s
  Matrix mlp_output;    // 1 x s

  static constexpr std::size_t kTensorCount = 6;
  static constexpr std::array<std::string_view, kTensorCount> kTensorNames{
      "item_aspects", "memory_keys", "memory_values", "mlp_weight", "mlp_bias", "mlp_output"};

  // Shape-only construction with all entries zero.
  ModelParams(std::size_t num_items, const HyperParams& hyper);
  ModelParams() = default;

  // Entries drawn i.i.d. from N(0, stddev^2).
  static ModelParams random(std::size_t num_items, const HyperParams& hyper,
                            std::uint64_t seed, double stddev = 0.1);

  std::array<Matrix*, kTensorCount> tensors();
  std::array<const Matrix*, kTensorCount> tensors() const;

  std::span<const double> aspect(Index item, std::size_t n) const;
  std::span<double> aspect(Index item, std::size_t n);

  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct MemoryReadout {
  std::vector<double> part;       // sum_t attention_t * m_t
  std::vector<double> attention;  // softmax over memory slices
};

// Everything computed for one item pair, kept for the backward pass.
struct RelationTrace {
  Index i = 0;
  Index j = 0;
  Matrix interactions;      // k^2 x d, row n*k+l = p_i^n (.) p_j^l
  Matrix memory_attention;  // k^2 x m (empty under kNmal)
  Matrix parts;             // k^2 x d, per-interaction relation vectors
  Matrix hidden;            // k^2 x s, pre-activation W v + b
  std::vector<double> weights;  // k^2 pooling weights
  std::vector<double> relation; // d
};

struct UserEmbedding {
  std::vector<double> z;
  std::size_t pair_count = 0;
};

Matrix pair_interaction(const ModelParams& params, Index i, Index j);

MemoryReadout memory_attend(const ModelParams& params, std::span<const double> v);

// Softmax over rows of h . ReLU(W v + b).
std::vector<double> weight_scores(const ModelParams& params, const Matrix& interactions);

RelationTrace relation_embedding(const ModelParams& params, Index i, Index j);

// Only the pooled relation vector, without retaining the trace.
std::vector<double> relation_vector(const ModelParams& params, Index i, Index j);

// Every unordered pair of `history`, in lexicographic position order.
std::vector<ItemPair> history_pairs(std::span<const Index> history);

// Uniform subset of ceil(ratio * n) of `items`, returned in original order.
// ratio >= 1 returns `items` unchanged and consumes no randomness.
template <typename T>
std::vector<T> subsample(std::span<const T> items, double ratio, Rng& rng);

// z_u = sum of r over the (ratio-subsampled) pairs of `history`.
UserEmbedding user_embedding(const ModelParams& params, std::span<const Index> history,
                             double ratio, Rng& rng);

struct ScoreDiagnostics {
  std::size_t empty_history = 0;
};

// Recommendation score (1 / full_history_size) * sum_j z . r(candidate, j)
// over `kept_history`. An empty history scores 0 and bumps the diagnostic.
double score(const ModelParams& params, const UserEmbedding& z,
             std::span<const Index> kept_history, std::size_t full_history_size,
             Index candidate, ScoreDiagnostics* diagnostics = nullptr);

// What a ranking needs to know about a user.
struct UserContext {
  UserEmbedding embedding;
  std::vector<Index> kept_history;
  std::size_t full_history_size = 0;
};

UserContext make_user_context(const ModelParams& params, std::span<const Index> history,
                              double ratio, Rng& rng, bool ratio_on_embedding = true,
                              bool ratio_on_score = true);

// Descending by score, ties by ascending item index.
std::vector<Index> rank_by_scores(std::span<const Index> candidates,
                                  std::span<const double> scores);

std::vector<Index> rank_candidates(const ModelParams& params, const UserContext& user,
                                   std::span<const Index> candidates);

}  // namespace reda
