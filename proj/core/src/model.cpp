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

#include "reda/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reda/error.hpp"

namespace reda {

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNpil: return "npil";
    case Ablation::kNmal: return "nmal";
  }
  return "full";
}

Ablation parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::kFull;
  if (s == "npil") return Ablation::kNpil;
  if (s == "nmal") return Ablation::kNmal;
  throw ConfigError("unknown ablation '" + std::string(s) + "' (full|npil|nmal)");
}

void HyperParams::validate() const {
  if (d == 0 || k == 0 || m == 0 || s == 0) {
    throw ConfigError("hyperparameters d, k, m, s must all be >= 1");
  }
}

ModelParams::ModelParams(std::size_t items, const HyperParams& hp)
    : hyper(hp),
      num_items(items),
      item_aspects(items, hp.aspects() * hp.d),
      memory_keys(hp.m, hp.d),
      memory_values(hp.m, hp.d),
      mlp_weight(hp.s, hp.d),
      mlp_bias(1, hp.s),
      mlp_output(1, hp.s) {
  hyper.validate();
}

ModelParams ModelParams::random(std::size_t items, const HyperParams& hp, std::uint64_t seed,
                                double stddev) {
  ModelParams p(items, hp);
  Rng rng = make_rng(seed, "init");
  std::normal_distribution<double> normal(0.0, stddev);
  for (Matrix* t : p.tensors()) {
    for (double& v : t->values()) v = normal(rng);
  }
  return p;
}

std::array<Matrix*, ModelParams::kTensorCount> ModelParams::tensors() {
  return {&item_aspects, &memory_keys, &memory_values, &mlp_weight, &mlp_bias, &mlp_output};
}

std::array<const Matrix*, ModelParams::kTensorCount> ModelParams::tensors() const {
  return {&item_aspects, &memory_keys, &memory_values, &mlp_weight, &mlp_bias, &mlp_output};
}

std::span<const double> ModelParams::aspect(Index item, std::size_t n) const {
  return item_aspects.row(item).subspan(n * hyper.d, hyper.d);
}

std::span<double> ModelParams::aspect(Index item, std::size_t n) {
  return item_aspects.row(item).subspan(n * hyper.d, hyper.d);
}

bool ModelParams::all_finite() const {
  for (const Matrix* t : tensors()) {
    for (double v : t->values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Matrix pair_interaction(const ModelParams& params, Index i, Index j) {
  if (i >= params.num_items || j >= params.num_items) {
    throw Error("item index out of range in pair_interaction");
  }
  const std::size_t k = params.hyper.aspects();
  const std::size_t d = params.hyper.d;
  Matrix v(k * k, d);
  for (std::size_t n = 0; n < k; ++n) {
    auto pi = params.aspect(i, n);
    for (std::size_t l = 0; l < k; ++l) {
      auto pj = params.aspect(j, l);
      auto row = v.row(n * k + l);
      for (std::size_t c = 0; c < d; ++c) row[c] = pi[c] * pj[c];
    }
  }
  return v;
}

namespace {

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error("non-finite interaction vector");
  }
}

// Memory read for one interaction row; writes attention and part in place.
void attend_into(const ModelParams& params, std::span<const double> v,
                 std::span<double> attention, std::span<double> part) {
  const Matrix& keys = params.memory_keys;
  const Matrix& values = params.memory_values;
  for (std::size_t t = 0; t < keys.rows(); ++t) attention[t] = dot(v, keys.row(t));
  softmax_inplace(attention);
  std::fill(part.begin(), part.end(), 0.0);
  for (std::size_t t = 0; t < values.rows(); ++t) axpy(attention[t], values.row(t), part);
}

// Pre-activation W v + b for one row; returns h . ReLU(.)
double mlp_score(const ModelParams& params, std::span<const double> v, std::span<double> hidden) {
  const std::size_t s = params.hyper.s;
  double score = 0.0;
  for (std::size_t o = 0; o < s; ++o) {
    hidden[o] = dot(params.mlp_weight.row(o), v) + params.mlp_bias(0, o);
    if (hidden[o] > 0.0) score += params.mlp_output(0, o) * hidden[o];
  }
  return score;
}

}  // namespace

MemoryReadout memory_attend(const ModelParams& params, std::span<const double> v) {
  check_finite(v);
  MemoryReadout out;
  out.attention.resize(params.hyper.m);
  out.part.resize(params.hyper.d);
  attend_into(params, v, out.attention, out.part);
  return out;
}

std::vector<double> weight_scores(const ModelParams& params, const Matrix& interactions) {
  std::vector<double> scores(interactions.rows());
  std::vector<double> hidden(params.hyper.s);
  for (std::size_t q = 0; q < interactions.rows(); ++q) {
    scores[q] = mlp_score(params, interactions.row(q), hidden);
  }
  softmax_inplace(scores);
  return scores;
}

RelationTrace relation_embedding(const ModelParams& params, Index i, Index j) {
  const auto& hp = params.hyper;
  const std::size_t pairs = hp.interactions();
  const bool memory = hp.ablation != Ablation::kNmal;

  RelationTrace tr;
  tr.i = i;
  tr.j = j;
  tr.interactions = pair_interaction(params, i, j);
  check_finite(tr.interactions.values());
  tr.hidden = Matrix(pairs, hp.s);
  tr.weights.resize(pairs);
  if (memory) {
    tr.memory_attention = Matrix(pairs, hp.m);
    tr.parts = Matrix(pairs, hp.d);
  } else {
    tr.parts = tr.interactions;
  }
  for (std::size_t q = 0; q < pairs; ++q) {
    auto v = tr.interactions.row(q);
    if (memory) attend_into(params, v, tr.memory_attention.row(q), tr.parts.row(q));
    tr.weights[q] = mlp_score(params, v, tr.hidden.row(q));
  }
  softmax_inplace(tr.weights);
  tr.relation.assign(hp.d, 0.0);
  for (std::size_t q = 0; q < pairs; ++q) axpy(tr.weights[q], tr.parts.row(q), tr.relation);
  return tr;
}

std::vector<double> relation_vector(const ModelParams& params, Index i, Index j) {
  return relation_embedding(params, i, j).relation;
}

std::vector<ItemPair> history_pairs(std::span<const Index> history) {
  std::vector<ItemPair> pairs;
  if (history.size() >= 2) pairs.reserve(history.size() * (history.size() - 1) / 2);
  for (std::size_t a = 0; a < history.size(); ++a) {
    for (std::size_t b = a + 1; b < history.size(); ++b) pairs.push_back({history[a], history[b]});
  }
  return pairs;
}

template <typename T>
std::vector<T> subsample(std::span<const T> items, double ratio, Rng& rng) {
  if (ratio >= 1.0 || items.empty()) return {items.begin(), items.end()};
  auto keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(items.size())));
  keep = std::clamp<std::size_t>(keep, 1, items.size());
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t n = 0; n < keep; ++n) {
    std::size_t pick = n + uniform_index(rng, order.size() - n);
    std::swap(order[n], order[pick]);
  }
  order.resize(keep);
  std::sort(order.begin(), order.end());
  std::vector<T> out;
  out.reserve(keep);
  for (std::size_t idx : order) out.push_back(items[idx]);
  return out;
}

template std::vector<Index> subsample(std::span<const Index>, double, Rng&);
template std::vector<ItemPair> subsample(std::span<const ItemPair>, double, Rng&);

UserEmbedding user_embedding(const ModelParams& params, std::span<const Index> history,
                             double ratio, Rng& rng) {
  UserEmbedding out;
  out.z.assign(params.hyper.d, 0.0);
  auto all = history_pairs(history);
  auto kept = subsample<ItemPair>(all, ratio, rng);
  for (const auto& p : kept) {
    auto r = relation_vector(params, p.first, p.second);
    axpy(1.0, r, out.z);
  }
  out.pair_count = kept.size();
  if (params.hyper.aggregation == Aggregation::kMean && out.pair_count > 0) {
    for (double& v : out.z) v /= static_cast<double>(out.pair_count);
  }
  return out;
}

double score(const ModelParams& params, const UserEmbedding& z,
             std::span<const Index> kept_history, std::size_t full_history_size,
             Index candidate, ScoreDiagnostics* diagnostics) {
  if (kept_history.empty() || full_history_size == 0) {
    if (diagnostics) ++diagnostics->empty_history;
    return 0.0;
  }
  double sum = 0.0;
  for (Index j : kept_history) sum += dot(z.z, relation_vector(params, candidate, j));
  return sum / static_cast<double>(full_history_size);
}

UserContext make_user_context(const ModelParams& params, std::span<const Index> history,
                              double ratio, Rng& rng, bool ratio_on_embedding,
                              bool ratio_on_score) {
  UserContext ctx;
  ctx.full_history_size = history.size();
  ctx.embedding = user_embedding(params, history, ratio_on_embedding ? ratio : 1.0, rng);
  ctx.kept_history = subsample<Index>(history, ratio_on_score ? ratio : 1.0, rng);
  return ctx;
}

std::vector<Index> rank_by_scores(std::span<const Index> candidates,
                                  std::span<const double> scores) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  std::vector<Index> ranked;
  ranked.reserve(order.size());
  for (std::size_t idx : order) ranked.push_back(candidates[idx]);
  return ranked;
}

std::vector<Index> rank_candidates(const ModelParams& params, const UserContext& user,
                                   std::span<const Index> candidates) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (Index c : candidates) {
    scores.push_back(score(params, user.embedding, user.kept_history, user.full_history_size, c));
  }
  return rank_by_scores(candidates, scores);
}

}  // namespace reda
