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

#include "reda/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>

#include "reda/error.hpp"
#include "reda/io.hpp"

namespace reda {
namespace {

// Defaults apply when neither a config file nor a flag sets a key.
constexpr std::array kKeys{
    // data
    ConfigKey{"input", "", "data", "raw interaction file for prepare", false},
    ConfigKey{"columns", "user,item,rating", "data", "input columns: user,item[,rating[,timestamp]] (skip ignores a column)"},
    ConfigKey{"delimiter", "auto", "data", "input delimiter: auto|tab|comma"},
    ConfigKey{"positive_threshold", "3", "data", "ratings strictly above this are positive"},
    ConfigKey{"min_actions", "6", "data", "minimum positives per retained user"},
    ConfigKey{"holdout", "random", "data", "held-out item choice: random|last"},
    ConfigKey{"n_neg", "100", "data", "evaluation negatives per user"},
    ConfigKey{"negative_pairs", "not_both", "data", "negative pair rule: not_both|neither"},
    ConfigKey{"data_dir", "data", "data", "directory holding the prepared split", false},
    // model
    ConfigKey{"d", "128", "model", "embedding dimension"},
    ConfigKey{"k", "2", "model", "aspects per item"},
    ConfigKey{"m", "20", "model", "memory slices"},
    ConfigKey{"s", "10", "model", "weight-attention hidden size"},
    ConfigKey{"ablation", "full", "model", "model variant: full|npil|nmal"},
    ConfigKey{"aggregation", "sum", "model", "user embedding aggregation: sum|mean"},
    ConfigKey{"init_stddev", "0.1", "model", "stddev of the Gaussian initialization"},
    // training
    ConfigKey{"batch_size", "2000", "train", "triplets per mini-batch"},
    ConfigKey{"learning_rate", "0.001", "train", "Adam learning rate"},
    ConfigKey{"epochs", "20", "train", "total training epochs"},
    ConfigKey{"adam_beta1", "0.9", "train", "Adam first-moment decay"},
    ConfigKey{"adam_beta2", "0.999", "train", "Adam second-moment decay"},
    ConfigKey{"adam_eps", "1e-08", "train", "Adam epsilon"},
    ConfigKey{"weight_decay", "0", "train", "L2 penalty added to gradients"},
    ConfigKey{"early_stop_patience", "0", "train", "stop after this many epochs without validation HR@10 gain (0: off)"},
    ConfigKey{"checkpoint_every", "0", "train", "write a checkpoint every E epochs (0: final only)", false},
    ConfigKey{"seed", "42", "train", "master random seed"},
    ConfigKey{"threads", "0", "train", "worker threads (0: all cores; REDA_THREADS overrides)", false},
    ConfigKey{"out_dir", "run", "train", "output directory for checkpoints and reports", false},
    ConfigKey{"resume", "", "train", "checkpoint to resume training from", false},
    ConfigKey{"checkpoint", "", "train", "checkpoint to evaluate or export (default: out_dir/model.ckpt)", false},
    // evaluation
    ConfigKey{"topn", "5,10", "evaluate", "top-N cutoffs"},
    ConfigKey{"relation_ratio", "1", "evaluate", "fraction of a user's relations used when scoring"},
    ConfigKey{"ratio_on_embedding", "true", "evaluate", "apply relation_ratio to the user embedding pairs"},
    ConfigKey{"ratio_on_score", "true", "evaluate", "apply relation_ratio to the score terms"},
    ConfigKey{"ratios", "", "evaluate", "robustness sweep ratios, e.g. 0.2,0.4,0.6,0.8,1"},
    ConfigKey{"bucket_edges", "10,20,30", "evaluate", "history-size edges for the sparsity report"},
    ConfigKey{"report_dir", "", "evaluate", "report output directory (default: out_dir/eval)", false},
    // export
    ConfigKey{"pairs", "", "export", "file of raw item id pairs, one pair per line", false},
    ConfigKey{"users", "", "export", "file of raw user ids, one per line", false},
    ConfigKey{"export_tensors", "false", "export", "also dump every model tensor as TSV", false},
    // synthetic
    ConfigKey{"synth_users", "200", "synth", "synthetic users"},
    ConfigKey{"synth_items", "500", "synth", "synthetic items"},
    ConfigKey{"synth_genres", "10", "synth", "synthetic genres"},
    ConfigKey{"synth_items_per_user", "12", "synth", "positives per synthetic user"},
    ConfigKey{"synth_genre_prob", "0.9", "synth", "probability a positive comes from the user's genre"},
    ConfigKey{"synth_output", "synthetic.tsv", "synth", "synthetic interaction file to write", false},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_num(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::size_t> parse_size_list(std::string_view s) {
  std::vector<std::size_t> out;
  if (trim(s).empty()) return out;
  for (const auto& f : split_string(std::string(s), ',')) {
    std::size_t v;
    if (!parse_num(f, v)) throw ConfigError("bad integer '" + f + "' in list");
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& f : split_string(std::string(s), ',')) {
    double v;
    if (!parse_num(f, v)) throw ConfigError("bad number '" + f + "' in list");
    out.push_back(v);
  }
  return out;
}

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_.emplace(std::string(k.name), std::string(k.default_value));
}

std::span<const ConfigKey> RunConfig::keys() { return kKeys; }

bool RunConfig::is_key(std::string_view name) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const ConfigKey& k) { return k.name == name; });
}

void RunConfig::set(std::string_view key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second = std::move(value);
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::vector<std::string> problems;
  std::size_t line_no = 0;
  for (const auto& raw : split_string(std::string(text), '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (!is_key(key)) {
      problems.push_back("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
      continue;
    }
    cfg.set(key, std::string(value));
  }
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) { return parse(read_file(path)); }

std::string RunConfig::canonical(bool hashed_only) const {
  std::string out;
  for (const auto& k : kKeys) {
    if (hashed_only && !k.hashed) continue;
    out += std::string(k.name) + " = " + get(k.name) + "\n";
  }
  return out;
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& k : kKeys) {
    if (!k.hashed) continue;
    std::string line = std::string(k.name) + " = " + get(k.name) + "\n";
    for (unsigned char c : line) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string RunConfig::hash_hex() const { return hex64(hash()); }

std::size_t RunConfig::get_size(std::string_view key) const {
  std::size_t v;
  if (!parse_num(get(key), v)) throw ConfigError(std::string(key) + ": expected a non-negative integer");
  return v;
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
  std::uint64_t v;
  if (!parse_num(get(key), v)) throw ConfigError(std::string(key) + ": expected a non-negative integer");
  return v;
}

double RunConfig::get_double(std::string_view key) const {
  double v;
  if (!parse_num(get(key), v)) throw ConfigError(std::string(key) + ": expected a number");
  return v;
}

bool RunConfig::get_bool(std::string_view key) const {
  bool v;
  if (!parse_bool(get(key), v)) throw ConfigError(std::string(key) + ": expected true or false");
  return v;
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  };
  for (auto key : {"positive_threshold", "init_stddev", "learning_rate", "adam_beta1", "adam_beta2",
                   "adam_eps", "weight_decay", "relation_ratio", "synth_genre_prob"}) {
    check([&] { get_double(key); });
  }
  for (auto key : {"min_actions", "n_neg", "d", "k", "m", "s", "batch_size", "epochs",
                   "early_stop_patience", "checkpoint_every", "threads", "synth_users",
                   "synth_items", "synth_genres", "synth_items_per_user"}) {
    check([&] { get_size(key); });
  }
  check([&] { get_u64("seed"); });
  check([&] { get_bool("ratio_on_embedding"); });
  check([&] { get_bool("ratio_on_score"); });
  check([&] { get_bool("export_tensors"); });
  if (!problems.empty()) return problems;  // typed views below need clean values

  check([&] { schema(); });
  check([&] { holdout(); });
  check([&] { hyper().validate(); });
  check([&] { train().validate(); });
  check([&] { eval().validate(); });
  check([&] {
    for (double r : ratios()) {
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("ratios must lie in (0, 1]");
    }
  });
  check([&] { synthetic().validate(); });
  if (get_double("init_stddev") < 0.0) problems.push_back("init_stddev must be >= 0");
  return problems;
}

ColumnSchema RunConfig::schema() const {
  const auto& d = get("delimiter");
  Delimiter delim;
  if (d == "auto") {
    delim = Delimiter::kAuto;
  } else if (d == "tab") {
    delim = Delimiter::kTab;
  } else if (d == "comma") {
    delim = Delimiter::kComma;
  } else {
    throw ConfigError("delimiter must be auto, tab or comma");
  }
  return ColumnSchema::parse(get("columns"), delim);
}

FilterOptions RunConfig::filter() const {
  return {get_double("positive_threshold"), get_size("min_actions")};
}

HoldoutPolicy RunConfig::holdout() const {
  const auto& h = get("holdout");
  if (h == "random") return HoldoutPolicy::kRandom;
  if (h == "last") return HoldoutPolicy::kLast;
  throw ConfigError("holdout must be random or last");
}

HyperParams RunConfig::hyper() const {
  HyperParams hp;
  hp.d = get_size("d");
  hp.k = get_size("k");
  hp.m = get_size("m");
  hp.s = get_size("s");
  hp.ablation = parse_ablation(get("ablation"));
  const auto& agg = get("aggregation");
  if (agg == "sum") {
    hp.aggregation = Aggregation::kSum;
  } else if (agg == "mean") {
    hp.aggregation = Aggregation::kMean;
  } else {
    throw ConfigError("aggregation must be sum or mean");
  }
  return hp;
}

TrainConfig RunConfig::train() const {
  TrainConfig tc;
  tc.batch_size = get_size("batch_size");
  tc.learning_rate = get_double("learning_rate");
  tc.epochs = get_size("epochs");
  tc.adam_beta1 = get_double("adam_beta1");
  tc.adam_beta2 = get_double("adam_beta2");
  tc.adam_eps = get_double("adam_eps");
  tc.weight_decay = get_double("weight_decay");
  tc.init_stddev = get_double("init_stddev");
  tc.seed = get_u64("seed");
  tc.threads = get_size("threads");
  const auto& rule = get("negative_pairs");
  if (rule == "not_both") {
    tc.negative_rule = NegativePairRule::kNotBoth;
  } else if (rule == "neither") {
    tc.negative_rule = NegativePairRule::kNeither;
  } else {
    throw ConfigError("negative_pairs must be not_both or neither");
  }
  return tc;
}

EvalOptions RunConfig::eval() const {
  EvalOptions eo;
  eo.cutoffs = parse_size_list(get("topn"));
  eo.relation_ratio = get_double("relation_ratio");
  eo.ratio_on_embedding = get_bool("ratio_on_embedding");
  eo.ratio_on_score = get_bool("ratio_on_score");
  eo.seed = get_u64("seed");
  eo.threads = get_size("threads");
  eo.bucket_edges = parse_size_list(get("bucket_edges"));
  return eo;
}

std::vector<double> RunConfig::ratios() const { return parse_double_list(get("ratios")); }

SyntheticSpec RunConfig::synthetic() const {
  SyntheticSpec spec;
  spec.n_users = get_size("synth_users");
  spec.n_items = get_size("synth_items");
  spec.n_genres = get_size("synth_genres");
  spec.items_per_user = get_size("synth_items_per_user");
  spec.genre_probability = get_double("synth_genre_prob");
  spec.seed = get_u64("seed");
  return spec;
}

}  // namespace reda
