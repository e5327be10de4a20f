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

#include "reda/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "reda/error.hpp"
#include "reda/io.hpp"
#include "reda/parallel.hpp"

namespace reda {

double ndcg_at(std::size_t rank, std::size_t cutoff) {
  if (rank == 0 || rank > cutoff) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

void EvalOptions::validate() const {
  if (!(relation_ratio > 0.0 && relation_ratio <= 1.0)) {
    throw ConfigError("relation_ratio must be in (0, 1]");
  }
  if (cutoffs.empty()) throw ConfigError("at least one top-N cutoff is required");
  for (auto c : cutoffs) {
    if (c == 0) throw ConfigError("top-N cutoffs must be >= 1");
  }
}

std::size_t held_out_rank(std::span<const Index> candidates, std::span<const double> scores) {
  const double s0 = scores[0];
  const Index c0 = candidates[0];
  std::size_t rank = 1;
  for (std::size_t n = 1; n < candidates.size(); ++n) {
    if (scores[n] > s0 || (scores[n] == s0 && candidates[n] < c0)) ++rank;
  }
  return rank;
}

MetricRow summarize(std::span<const UserResult> users, std::span<const std::size_t> cutoffs,
                    std::string label) {
  MetricRow row;
  row.label = std::move(label);
  row.users = users.size();
  for (std::size_t cutoff : cutoffs) {
    std::size_t hits = 0;
    double gain = 0.0;
    for (const auto& u : users) {
      hits += static_cast<std::size_t>(hit_rate(u.rank, cutoff));
      gain += ndcg_at(u.rank, cutoff);
    }
    row.hits[cutoff] = hits;
    if (!users.empty()) {
      const double n = static_cast<double>(users.size());
      row.hr[cutoff] = static_cast<double>(hits) / n;
      row.ndcg[cutoff] = gain / n;
    }
  }
  return row;
}

std::vector<MetricRow> sparsity_report(const EvalReport& report,
                                       std::span<const std::size_t> bucket_edges) {
  std::vector<std::size_t> edges(bucket_edges.begin(), bucket_edges.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<std::vector<UserResult>> buckets(edges.size() + 1);
  for (const auto& u : report.per_user) {
    auto b = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), u.history_size) - edges.begin());
    buckets[b].push_back(u);
  }
  std::vector<MetricRow> rows;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    std::string label;
    if (edges.empty()) {
      label = "all";
    } else if (b == 0) {
      label = "<" + std::to_string(edges[0]);
    } else if (b == edges.size()) {
      label = ">=" + std::to_string(edges.back());
    } else {
      label = std::to_string(edges[b - 1]) + "-" + std::to_string(edges[b] - 1);
    }
    rows.push_back(summarize(buckets[b], report.cutoffs, label));
  }
  return rows;
}

EvalReport evaluate_with(const CandidateScorer& scorer, const LooSplit& split,
                         const EvalOptions& options) {
  options.validate();
  const std::size_t users = split.num_users();
  std::vector<UserResult> results(users);
  std::vector<char> degenerate(users, 0);
  parallel_for(users, options.threads, [&](std::size_t u) {
    const auto& negatives = split.eval_negatives[u];
    auto& res = results[u];
    res.user = static_cast<Index>(u);
    res.history_size = split.train.positives[u].size();
    if (res.history_size == 0) {
      res.rank = negatives.size() + 1;
      degenerate[u] = 1;
      return;
    }
    std::vector<Index> candidates;
    candidates.reserve(negatives.size() + 1);
    candidates.push_back(split.test[u]);
    candidates.insert(candidates.end(), negatives.begin(), negatives.end());
    auto scores = scorer(static_cast<Index>(u), candidates);
    res.rank = held_out_rank(candidates, scores);
  });

  EvalReport report;
  report.cutoffs = options.cutoffs;
  std::sort(report.cutoffs.begin(), report.cutoffs.end());
  report.cutoffs.erase(std::unique(report.cutoffs.begin(), report.cutoffs.end()),
                       report.cutoffs.end());
  report.per_user = std::move(results);
  for (char d : degenerate) report.degenerate_users += static_cast<std::size_t>(d);
  auto all = summarize(report.per_user, report.cutoffs);
  report.hr = all.hr;
  report.ndcg = all.ndcg;
  report.groups = sparsity_report(report, options.bucket_edges);
  return report;
}

EvalReport evaluate(const ModelParams& params, const LooSplit& split, const EvalOptions& options) {
  auto scorer = [&](Index user, std::span<const Index> candidates) {
    Rng rng = make_rng(options.seed, "robustness", user);
    auto ctx = make_user_context(params, split.train.positives[user], options.relation_ratio, rng,
                                 options.ratio_on_embedding, options.ratio_on_score);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (Index c : candidates) {
      scores.push_back(
          score(params, ctx.embedding, ctx.kept_history, ctx.full_history_size, c));
    }
    return scores;
  };
  return evaluate_with(scorer, split, options);
}

std::vector<SweepRow> robustness_sweep(const ModelParams& params, const LooSplit& split,
                                       std::span<const double> ratios,
                                       const EvalOptions& options) {
  std::vector<SweepRow> rows;
  for (double ratio : ratios) {
    EvalOptions opts = options;
    opts.relation_ratio = ratio;
    auto report = evaluate(params, split, opts);
    rows.push_back({ratio, report.hr, report.ndcg});
  }
  return rows;
}

std::vector<AblationRow> ablation_run(const LooSplit& split, const HyperParams& hyper,
                                      const TrainConfig& train_config,
                                      const EvalOptions& eval_options,
                                      std::span<const Ablation> variants) {
  std::vector<AblationRow> rows;
  for (Ablation variant : variants) {
    HyperParams hp = hyper;
    hp.ablation = variant;
    AblationRow row;
    row.variant = variant;
    auto state = train(split, hp, train_config, [&](const TrainingState&, const EpochRecord& rec) {
      row.max_memory_grad_norm = std::max(row.max_memory_grad_norm, rec.max_memory_grad_norm);
      return true;
    });
    row.item_parameter_count = state.params.item_aspects.size();
    row.final_loss = state.history.empty() ? 0.0 : state.history.back().mean_loss;
    row.report = evaluate(state.params, split, eval_options);
    rows.push_back(std::move(row));
  }
  return rows;
}

void SyntheticSpec::validate() const {
  if (n_users == 0 || n_items == 0 || n_genres == 0 || items_per_user == 0) {
    throw ConfigError("synthetic sizes must be positive");
  }
  if (n_items % n_genres != 0) throw ConfigError("n_items must be divisible by n_genres");
  if (!(genre_probability > 0.5 && genre_probability <= 1.0)) {
    throw ConfigError("genre probability must be in (0.5, 1]");
  }
  const std::size_t genre_size = n_items / n_genres;
  if (items_per_user > genre_size) {
    throw ConfigError("items_per_user (" + std::to_string(items_per_user) +
                      ") exceeds genre size (" + std::to_string(genre_size) + ")");
  }
  if (genre_probability < 1.0 && n_items - genre_size < items_per_user) {
    throw ConfigError("too few out-of-genre items for items_per_user");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t genre_size = spec.n_items / spec.n_genres;
  SyntheticData out;
  out.item_genre.resize(spec.n_items);
  for (std::size_t i = 0; i < spec.n_items; ++i) out.item_genre[i] = i / genre_size;

  Dataset& ds = out.dataset;
  for (std::size_t i = 0; i < spec.n_items; ++i) ds.items.insert("i" + std::to_string(i));
  Rng rng = make_rng(spec.seed, "synthetic");
  std::bernoulli_distribution in_genre(spec.genre_probability);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    ds.users.insert("u" + std::to_string(u));
    const std::size_t g = uniform_index(rng, spec.n_genres);
    out.user_genre.push_back(g);
    std::unordered_set<Index> chosen;
    auto& pos = ds.positives.emplace_back();
    while (pos.size() < spec.items_per_user) {
      std::size_t item;
      if (in_genre(rng)) {
        item = g * genre_size + uniform_index(rng, genre_size);
      } else {
        item = uniform_index(rng, spec.n_items - genre_size);
        if (item >= g * genre_size) item += genre_size;
      }
      if (chosen.insert(static_cast<Index>(item)).second) pos.push_back(static_cast<Index>(item));
    }
  }
  ds.num_users = ds.users.size();
  ds.num_items = ds.items.size();
  return out;
}

ExportSummary export_embeddings(const ModelParams& params, std::span<const RawPair> pairs,
                                std::span<const std::string> users, const LooSplit& split,
                                const std::filesystem::path& out_dir, const std::string& header) {
  ExportSummary summary;
  std::filesystem::create_directories(out_dir);
  const std::size_t d = params.hyper.d;
  auto write_header = [&](std::ofstream& out, const char* key) {
    if (!header.empty()) out << "# " << header << "\n";
    out << key;
    for (std::size_t c = 0; c < d; ++c) out << "\td" << c;
    out << "\n";
  };

  {
    auto path = out_dir / "relations.tsv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_header(out, "item_a\titem_b");
    for (const auto& p : pairs) {
      auto a = split.train.items.find(p.first);
      auto b = split.train.items.find(p.second);
      if (!a || !b) {
        summary.warnings.push_back("unknown item in pair " + p.first + "," + p.second);
        ++summary.skipped;
        continue;
      }
      auto r = relation_vector(params, *a, *b);
      out << p.first << '\t' << p.second;
      for (double v : r) out << '\t' << format_double(v, 12);
      out << "\n";
      ++summary.relations_written;
    }
  }
  {
    auto path = out_dir / "users.tsv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_header(out, "user");
    for (const auto& name : users) {
      auto u = split.train.users.find(name);
      if (!u) {
        summary.warnings.push_back("unknown user " + name);
        ++summary.skipped;
        continue;
      }
      Rng unused(0);
      auto z = user_embedding(params, split.train.positives[*u], 1.0, unused).z;
      softmax_inplace(z);
      out << name;
      for (double v : z) out << '\t' << format_double(v, 12);
      out << "\n";
      ++summary.users_written;
    }
  }
  return summary;
}

}  // namespace reda
