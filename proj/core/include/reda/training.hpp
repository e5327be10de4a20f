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
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "reda/data.hpp"
#include "reda/model.hpp"
#include "reda/tensor.hpp"

namespace reda {

struct TrainConfig {
  std::size_t batch_size = 2000;
  double learning_rate = 0.001;
  std::size_t epochs = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double init_stddev = 0.1;
  std::uint64_t seed = 42;
  std::size_t threads = 0;  // 0: all cores
  NegativePairRule negative_rule = NegativePairRule::kNotBoth;

  void validate() const;
};

// Gradient with the shape of ModelParams. Item rows are sparse: only items
// touched by the triplets that produced it are present.
struct Gradients {
  std::size_t row_width = 0;  // k * d
  std::unordered_map<Index, std::vector<double>> item_rows;
  Matrix memory_keys;
  Matrix memory_values;
  Matrix mlp_weight;
  Matrix mlp_bias;
  Matrix mlp_output;

  Gradients() = default;
  explicit Gradients(const ModelParams& params);

  std::span<double> item_row(Index item);
  void add(const Gradients& other);
  void scale(double factor);
  bool all_finite() const;
  double memory_norm() const;  // L2 norm over memory keys and values
};

// log sigmoid(r_c . r_n - r_c . r_t). The trainer minimizes this value.
double triplet_loss(std::span<const double> target, std::span<const double> context,
                    std::span<const double> negative);

// Numerically stable log(sigmoid(x)).
double log_sigmoid(double x);

// Accumulates d(loss)/d(params) given d(loss)/d(relation) for one pair.
void backward_relation(const ModelParams& params, const RelationTrace& trace,
                       std::span<const double> grad_relation, Gradients& grads);

// Accumulates the gradient of triplet_loss over all three relations and
// returns the loss.
double backward_triplet(const ModelParams& params, const RelationTrace& target,
                        const RelationTrace& context, const RelationTrace& negative,
                        Gradients& grads);

// Forward and backward for one triplet.
double accumulate_triplet(const ModelParams& params, const TrainingTriplet& triplet,
                          Gradients& grads);

// Loss of one triplet, forward only.
double evaluate_triplet_loss(const ModelParams& params, const TrainingTriplet& triplet);

struct AdamState {
  std::array<Matrix, ModelParams::kTensorCount> first;
  std::array<Matrix, ModelParams::kTensorCount> second;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ModelParams& params);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// One bias-corrected Adam update. Item rows absent from `grads` keep their
// parameters and moments untouched (lazy sparse Adam). Returns false and
// leaves everything unchanged if the gradient is not finite.
bool adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const AdamOptions& options);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double seconds = 0.0;
  std::size_t batches = 0;
  std::size_t skipped_batches = 0;
  double max_memory_grad_norm = 0.0;
};

struct TrainingState {
  ModelParams params;
  AdamState adam;
  std::size_t epochs_done = 0;
  std::vector<EpochRecord> history;
};

TrainingState init_training(std::size_t num_items, const HyperParams& hyper,
                            const TrainConfig& config);

// Mean-of-triplets gradient for a batch and the batch mean loss. Triplets
// are processed in a fixed number of shards merged in order, so the result
// does not depend on `threads`.
double batch_gradient(const ModelParams& params, std::span<const TrainingTriplet> batch,
                      std::size_t threads, Gradients& out);

// Runs one epoch of ceil(eligible_pairs / batch_size) batches. The epoch's
// triplets come from a stream seeded by (seed, epoch index), so resuming
// from a checkpoint replays exactly.
EpochRecord train_epoch(TrainingState& state, const TripletSampler& sampler,
                        const TrainConfig& config);

// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const TrainingState&, const EpochRecord&)>;

// Trains until `config.epochs` total epochs are done (continuing from
// state.epochs_done).
void train(TrainingState& state, const LooSplit& split, const TrainConfig& config,
           const EpochCallback& on_epoch = {});

TrainingState train(const LooSplit& split, const HyperParams& hyper, const TrainConfig& config,
                    const EpochCallback& on_epoch = {});

}  // namespace reda
