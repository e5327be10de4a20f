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

#include "reda/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "reda/error.hpp"
#include "reda/parallel.hpp"

namespace reda {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must be in (0,1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must be in (0,1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

Gradients::Gradients(const ModelParams& params)
    : row_width(params.item_aspects.cols()),
      memory_keys(params.memory_keys.rows(), params.memory_keys.cols()),
      memory_values(params.memory_values.rows(), params.memory_values.cols()),
      mlp_weight(params.mlp_weight.rows(), params.mlp_weight.cols()),
      mlp_bias(params.mlp_bias.rows(), params.mlp_bias.cols()),
      mlp_output(params.mlp_output.rows(), params.mlp_output.cols()) {}

std::span<double> Gradients::item_row(Index item) {
  auto [it, inserted] = item_rows.try_emplace(item);
  if (inserted) it->second.assign(row_width, 0.0);
  return it->second;
}

void Gradients::add(const Gradients& other) {
  for (const auto& [item, row] : other.item_rows) axpy(1.0, row, item_row(item));
  axpy(1.0, other.memory_keys.values(), memory_keys.values());
  axpy(1.0, other.memory_values.values(), memory_values.values());
  axpy(1.0, other.mlp_weight.values(), mlp_weight.values());
  axpy(1.0, other.mlp_bias.values(), mlp_bias.values());
  axpy(1.0, other.mlp_output.values(), mlp_output.values());
}

void Gradients::scale(double factor) {
  for (auto& [item, row] : item_rows) {
    for (double& v : row) v *= factor;
  }
  for (Matrix* m : {&memory_keys, &memory_values, &mlp_weight, &mlp_bias, &mlp_output}) {
    for (double& v : m->values()) v *= factor;
  }
}

bool Gradients::all_finite() const {
  auto finite = [](std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
  };
  for (const auto& [item, row] : item_rows) {
    if (!finite(row)) return false;
  }
  return finite(memory_keys.values()) && finite(memory_values.values()) &&
         finite(mlp_weight.values()) && finite(mlp_bias.values()) && finite(mlp_output.values());
}

double Gradients::memory_norm() const {
  return std::sqrt(dot(memory_keys.values(), memory_keys.values()) +
                   dot(memory_values.values(), memory_values.values()));
}

// ---------------------------------------------------------------------------
// Loss and backward pass
// ---------------------------------------------------------------------------

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

namespace {

// d/dx log sigmoid(x) = sigmoid(-x)
double sigmoid_neg(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double triplet_margin(std::span<const double> target, std::span<const double> context,
                      std::span<const double> negative) {
  return dot(context, negative) - dot(context, target);
}

}  // namespace

double triplet_loss(std::span<const double> target, std::span<const double> context,
                    std::span<const double> negative) {
  return log_sigmoid(triplet_margin(target, context, negative));
}

void backward_relation(const ModelParams& params, const RelationTrace& tr,
                       std::span<const double> grad_relation, Gradients& grads) {
  const auto& hp = params.hyper;
  const std::size_t k = hp.aspects();
  const std::size_t pairs = k * k;
  const std::size_t d = hp.d;
  const bool memory = hp.ablation != Ablation::kNmal;
  if (grad_relation.size() != d || tr.parts.rows() != pairs || tr.weights.size() != pairs) {
    throw Error("shape mismatch in backward_relation");
  }

  // Pooling softmax: dL/dscore_q = w_q (g_q - sum_p w_p g_p), g_q = dL/dr . part_q
  std::vector<double> grad_score(pairs);
  double mean = 0.0;
  for (std::size_t q = 0; q < pairs; ++q) {
    grad_score[q] = dot(grad_relation, tr.parts.row(q));
    mean += tr.weights[q] * grad_score[q];
  }
  for (std::size_t q = 0; q < pairs; ++q) grad_score[q] = tr.weights[q] * (grad_score[q] - mean);

  std::vector<double> grad_part(d);
  std::vector<double> grad_v(d);
  std::vector<double> grad_att(hp.m);
  for (std::size_t q = 0; q < pairs; ++q) {
    auto v = tr.interactions.row(q);
    for (std::size_t c = 0; c < d; ++c) grad_part[c] = tr.weights[q] * grad_relation[c];
    std::fill(grad_v.begin(), grad_v.end(), 0.0);

    if (memory) {
      auto att = tr.memory_attention.row(q);
      double att_mean = 0.0;
      for (std::size_t t = 0; t < hp.m; ++t) {
        axpy(att[t], grad_part, grads.memory_values.row(t));
        grad_att[t] = dot(grad_part, params.memory_values.row(t));
        att_mean += att[t] * grad_att[t];
      }
      for (std::size_t t = 0; t < hp.m; ++t) {
        double grad_logit = att[t] * (grad_att[t] - att_mean);
        axpy(grad_logit, v, grads.memory_keys.row(t));
        axpy(grad_logit, params.memory_keys.row(t), grad_v);
      }
    } else {
      axpy(1.0, grad_part, grad_v);
    }

    // score_q = h . ReLU(W v + b)
    auto hidden = tr.hidden.row(q);
    for (std::size_t o = 0; o < hp.s; ++o) {
      if (hidden[o] <= 0.0) continue;  // ReLU'(0) = 0
      grads.mlp_output(0, o) += grad_score[q] * hidden[o];
      double grad_hidden = grad_score[q] * params.mlp_output(0, o);
      axpy(grad_hidden, v, grads.mlp_weight.row(o));
      grads.mlp_bias(0, o) += grad_hidden;
      axpy(grad_hidden, params.mlp_weight.row(o), grad_v);
    }

    // v = p_i^n (.) p_j^l
    const std::size_t n = q / k;
    const std::size_t l = q % k;
    auto pi = params.aspect(tr.i, n);
    auto pj = params.aspect(tr.j, l);
    auto gi = grads.item_row(tr.i).subspan(n * d, d);
    for (std::size_t c = 0; c < d; ++c) gi[c] += grad_v[c] * pj[c];
    auto gj = grads.item_row(tr.j).subspan(l * d, d);
    for (std::size_t c = 0; c < d; ++c) gj[c] += grad_v[c] * pi[c];
  }
}

double backward_triplet(const ModelParams& params, const RelationTrace& target,
                        const RelationTrace& context, const RelationTrace& negative,
                        Gradients& grads) {
  const auto& rt = target.relation;
  const auto& rc = context.relation;
  const auto& rn = negative.relation;
  if (rt.size() != rc.size() || rc.size() != rn.size()) {
    throw Error("shape mismatch in backward_triplet");
  }
  double x = triplet_margin(rt, rc, rn);
  double g = sigmoid_neg(x);  // dL/dx

  const std::size_t d = rc.size();
  std::vector<double> grad(d);
  for (std::size_t c = 0; c < d; ++c) grad[c] = -g * rc[c];
  backward_relation(params, target, grad, grads);
  for (std::size_t c = 0; c < d; ++c) grad[c] = g * (rn[c] - rt[c]);
  backward_relation(params, context, grad, grads);
  for (std::size_t c = 0; c < d; ++c) grad[c] = g * rc[c];
  backward_relation(params, negative, grad, grads);
  return log_sigmoid(x);
}

double accumulate_triplet(const ModelParams& params, const TrainingTriplet& t, Gradients& grads) {
  auto target = relation_embedding(params, t.target.first, t.target.second);
  auto context = relation_embedding(params, t.context.first, t.context.second);
  auto negative = relation_embedding(params, t.negative.first, t.negative.second);
  return backward_triplet(params, target, context, negative, grads);
}

double evaluate_triplet_loss(const ModelParams& params, const TrainingTriplet& t) {
  return triplet_loss(relation_vector(params, t.target.first, t.target.second),
                      relation_vector(params, t.context.first, t.context.second),
                      relation_vector(params, t.negative.first, t.negative.second));
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

AdamState::AdamState(const ModelParams& params) {
  auto tensors = params.tensors();
  for (std::size_t n = 0; n < ModelParams::kTensorCount; ++n) {
    first[n] = Matrix(tensors[n]->rows(), tensors[n]->cols());
    second[n] = Matrix(tensors[n]->rows(), tensors[n]->cols());
  }
}

namespace {

struct AdamUpdate {
  double lr_t;  // learning rate with both bias corrections folded in
  double beta1;
  double beta2;
  double eps_t;
  double weight_decay;

  void apply(std::span<double> param, std::span<const double> grad, std::span<double> m,
             std::span<double> v) const {
    for (std::size_t c = 0; c < param.size(); ++c) {
      double g = grad[c] + weight_decay * param[c];
      m[c] = beta1 * m[c] + (1.0 - beta1) * g;
      v[c] = beta2 * v[c] + (1.0 - beta2) * g * g;
      param[c] -= lr_t * m[c] / (std::sqrt(v[c]) + eps_t);
    }
  }
};

}  // namespace

bool adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const AdamOptions& options) {
  if (!grads.all_finite()) return false;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(options.beta1, t);
  const double bc2 = 1.0 - std::pow(options.beta2, t);
  // lr * m_hat / (sqrt(v_hat) + eps) rewritten on the raw moments.
  AdamUpdate update{options.learning_rate * std::sqrt(bc2) / bc1, options.beta1, options.beta2,
                    options.eps * std::sqrt(bc2), options.weight_decay};

  for (const auto& [item, row] : grads.item_rows) {
    update.apply(params.item_aspects.row(item), row, state.first[0].row(item),
                 state.second[0].row(item));
  }
  const std::array<const Matrix*, 5> dense{&grads.memory_keys, &grads.memory_values,
                                           &grads.mlp_weight, &grads.mlp_bias, &grads.mlp_output};
  auto tensors = params.tensors();
  for (std::size_t n = 1; n < ModelParams::kTensorCount; ++n) {
    update.apply(tensors[n]->values(), dense[n - 1]->values(), state.first[n].values(),
                 state.second[n].values());
  }
  return true;
}

// ---------------------------------------------------------------------------
// Epoch loop
// ---------------------------------------------------------------------------

TrainingState init_training(std::size_t num_items, const HyperParams& hyper,
                            const TrainConfig& config) {
  TrainingState state;
  state.params = ModelParams::random(num_items, hyper, config.seed, config.init_stddev);
  state.adam = AdamState(state.params);
  return state;
}

namespace {
constexpr std::size_t kGradientShards = 16;
}

double batch_gradient(const ModelParams& params, std::span<const TrainingTriplet> batch,
                      std::size_t threads, Gradients& out) {
  out = Gradients(params);
  if (batch.empty()) return 0.0;
  const std::size_t shards = std::min(kGradientShards, batch.size());
  std::vector<Gradients> partial(shards, Gradients(params));
  std::vector<double> loss(shards, 0.0);
  parallel_for(shards, threads, [&](std::size_t s) {
    std::size_t begin = batch.size() * s / shards;
    std::size_t end = batch.size() * (s + 1) / shards;
    for (std::size_t n = begin; n < end; ++n) {
      loss[s] += accumulate_triplet(params, batch[n], partial[s]);
    }
  });
  double total = 0.0;
  for (std::size_t s = 0; s < shards; ++s) {
    out.add(partial[s]);
    total += loss[s];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.scale(inv);
  return total * inv;
}

EpochRecord train_epoch(TrainingState& state, const TripletSampler& sampler,
                        const TrainConfig& config) {
  auto start = std::chrono::steady_clock::now();
  EpochRecord rec;
  rec.epoch = state.epochs_done + 1;
  const std::size_t pairs = sampler.eligible_pair_count();
  const std::size_t batches = std::max<std::size_t>(1, (pairs + config.batch_size - 1) / config.batch_size);

  AdamOptions adam{config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                   config.weight_decay};
  Rng rng = make_rng(config.seed, "train", state.epochs_done);
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  Gradients grads;
  for (std::size_t b = 0; b < batches; ++b) {
    auto triplets = sampler.batch(config.batch_size, rng);
    double loss = batch_gradient(state.params, triplets, config.threads, grads);
    rec.max_memory_grad_norm = std::max(rec.max_memory_grad_norm, grads.memory_norm());
    if (!adam_step(state.params, grads, state.adam, adam)) {
      ++rec.skipped_batches;
      continue;
    }
    loss_sum += loss * static_cast<double>(triplets.size());
    loss_count += triplets.size();
  }
  rec.batches = batches;
  rec.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ++state.epochs_done;
  state.history.push_back(rec);
  return rec;
}

void train(TrainingState& state, const LooSplit& split, const TrainConfig& config,
           const EpochCallback& on_epoch) {
  config.validate();
  TripletSampler sampler(split.train, config.negative_rule);
  while (state.epochs_done < config.epochs) {
    auto rec = train_epoch(state, sampler, config);
    if (on_epoch && !on_epoch(state, rec)) break;
  }
}

TrainingState train(const LooSplit& split, const HyperParams& hyper, const TrainConfig& config,
                    const EpochCallback& on_epoch) {
  auto state = init_training(split.num_items(), hyper, config);
  train(state, split, config, on_epoch);
  return state;
}

}  // namespace reda
