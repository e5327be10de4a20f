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

#include <benchmark/benchmark.h>

#include <algorithm>

#include "reda/evaluation.hpp"
#include "reda/model.hpp"
#include "reda/training.hpp"

namespace {

using namespace reda;

HyperParams hyper(std::size_t d, std::size_t k, std::size_t m) {
  HyperParams h;
  h.d = d;
  h.k = k;
  h.m = m;
  h.s = 10;
  return h;
}

// Args: d, k, m.
void BM_RelationEmbedding(benchmark::State& state) {
  auto params = ModelParams::random(100, hyper(state.range(0), state.range(1), state.range(2)), 1);
  Index i = 0;
  for (auto _ : state) {
    auto trace = relation_embedding(params, i % 100, (i + 7) % 100);
    benchmark::DoNotOptimize(trace.relation.data());
    ++i;
  }
}
BENCHMARK(BM_RelationEmbedding)->Args({32, 2, 10})->Args({128, 2, 20})->Args({128, 4, 20});

void BM_TripletBackward(benchmark::State& state) {
  auto params = ModelParams::random(100, hyper(state.range(0), state.range(1), state.range(2)), 1);
  Gradients grads(params);
  Index i = 0;
  for (auto _ : state) {
    TrainingTriplet t{0, {i % 100, (i + 1) % 100}, {(i + 2) % 100, (i + 3) % 100},
                      {(i + 4) % 100, (i + 5) % 100}};
    benchmark::DoNotOptimize(accumulate_triplet(params, t, grads));
    ++i;
  }
}
BENCHMARK(BM_TripletBackward)->Args({32, 2, 10})->Args({128, 2, 20});

void BM_BatchGradient(benchmark::State& state) {
  auto params = ModelParams::random(500, hyper(32, 2, 10), 1);
  std::vector<TrainingTriplet> batch;
  for (Index n = 0; n < 2000; ++n) {
    batch.push_back({0, {n % 500, (n + 1) % 500}, {(n + 2) % 500, (n + 3) % 500},
                     {(n + 4) % 500, (n + 5) % 500}});
  }
  Gradients grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_gradient(params, batch, state.range(0), grads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_BatchGradient)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

// One user's ranking of 101 candidates with an 11-item history.
void BM_RankUser(benchmark::State& state) {
  auto params = ModelParams::random(500, hyper(state.range(0), 2, 10), 1);
  std::vector<Index> history{3, 40, 77, 120, 160, 201, 250, 300, 333, 420, 480};
  std::vector<Index> candidates;
  for (Index c = 0; candidates.size() < 101; ++c) {
    if (std::find(history.begin(), history.end(), c) == history.end()) candidates.push_back(c);
  }
  for (auto _ : state) {
    Rng rng(0);
    auto user = make_user_context(params, history, 1.0, rng);
    auto ranked = rank_candidates(params, user, candidates);
    benchmark::DoNotOptimize(ranked.data());
  }
}
BENCHMARK(BM_RankUser)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
