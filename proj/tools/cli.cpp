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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include "reda/checkpoint.hpp"
#include "reda/config.hpp"
#include "reda/error.hpp"
#include "reda/evaluation.hpp"
#include "reda/io.hpp"
#include "reda/training.hpp"

namespace reda::cli {
namespace {

namespace fs = std::filesystem;

// A problem with how the command was invoked (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string header_for(std::string_view command, const RunConfig& cfg) {
  return "reda " + std::string(command) + " config=" + cfg.hash_hex();
}

fs::path checkpoint_path(const RunConfig& cfg) {
  const auto& explicit_path = cfg.get("checkpoint");
  return explicit_path.empty() ? fs::path(cfg.get("out_dir")) / "model.ckpt" : fs::path(explicit_path);
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

LooSplit load_split(const RunConfig& cfg) {
  fs::path dir = cfg.get("data_dir");
  require_file(dir / "idmap.tsv", "prepared split");
  return read_split(dir);
}

// ---------------------------------------------------------------------------

int cmd_prepare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& input = cfg.get("input");
  if (input.empty()) throw UsageError("prepare needs --input <file>");
  require_file(input, "input file");

  auto loaded = load_interactions(input, cfg.schema());
  if (!loaded.errors.empty()) {
    err << loaded.errors.size() << " malformed line(s) in " << input << "\n";
    std::size_t shown = 0;
    for (const auto& e : loaded.errors) {
      if (shown++ == 10) {
        err << "  ...\n";
        break;
      }
      err << "  line " << e.line << ": " << e.message << "\n";
    }
  }
  auto ds = filter_dataset(loaded.records, cfg.filter());
  auto split = leave_one_out_split(ds, cfg.get_size("n_neg"), cfg.get_u64("seed"), cfg.holdout());

  fs::path dir = cfg.get("data_dir");
  auto header = header_for("prepare", cfg);
  write_split(dir, split, header);
  write_dataset_stats(dir / "dataset_stats.tsv", ds, header);
  out << "records " << loaded.records.size() << ", malformed " << loaded.errors.size() << "\n"
      << "users " << ds.num_users << ", items " << ds.num_items << ", actions " << ds.num_actions()
      << ", density " << format_double(100.0 * ds.density(), 4) << "%\n"
      << "split written to " << dir.string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  auto split = load_split(cfg);
  auto hp = cfg.hyper();
  auto tc = cfg.train();
  fs::path out_dir = cfg.get("out_dir");
  const std::size_t every = cfg.get_size("checkpoint_every");
  const std::size_t patience = cfg.get_size("early_stop_patience");

  TrainingState state;
  if (const auto& resume = cfg.get("resume"); !resume.empty()) {
    require_file(resume, "resume checkpoint");
    auto ckpt = read_checkpoint(resume);
    if (!ckpt.adam) throw Error("resume checkpoint " + resume + " has no optimizer state");
    if (ckpt.params.num_items != split.num_items() || !(ckpt.params.hyper == hp)) {
      throw Error("resume checkpoint does not match the configured model or split");
    }
    state.params = std::move(ckpt.params);
    state.adam = std::move(*ckpt.adam);
    state.epochs_done = ckpt.epochs_done;
  } else {
    state = init_training(split.num_items(), hp, tc);
  }

  // With early stopping, one more item per user is held out of the
  // training positives to form a validation split.
  std::optional<LooSplit> validation;
  if (patience > 0) {
    validation = leave_one_out_split(split.train, cfg.get_size("n_neg"),
                                     derive_seed(tc.seed, "validation"), HoldoutPolicy::kRandom);
  }
  const LooSplit& fit = validation ? *validation : split;
  EvalOptions val_opts = cfg.eval();
  val_opts.cutoffs = {10};
  val_opts.relation_ratio = 1.0;

  auto header = header_for("train", cfg);
  auto save = [&](const fs::path& path) {
    Checkpoint ckpt{state.params, state.adam, state.epochs_done, cfg.hash()};
    write_checkpoint(path, ckpt);
  };
  double best = -1.0;
  std::size_t stale = 0;
  train(state, fit, tc, [&](const TrainingState& st, const EpochRecord& rec) {
    out << "epoch " << rec.epoch << "  loss " << format_double(rec.mean_loss, 8) << "  ("
        << format_double(rec.seconds, 3) << " s";
    if (rec.skipped_batches) out << ", " << rec.skipped_batches << " skipped batches";
    out << ")\n";
    if (every > 0 && st.epochs_done % every == 0) {
      save(out_dir / ("model-epoch" + std::to_string(st.epochs_done) + ".ckpt"));
    }
    if (validation) {
      double hr = evaluate(st.params, *validation, val_opts).hr.at(10);
      out << "  validation HR@10 " << format_double(hr, 4) << "\n";
      if (hr > best) {
        best = hr;
        stale = 0;
      } else if (++stale >= patience) {
        out << "early stop after epoch " << rec.epoch << "\n";
        return false;
      }
    }
    return true;
  });

  save(out_dir / "model.ckpt");
  std::ostringstream loss;
  loss << "# " << header << "\n" << "epoch\tmean_loss\twall_clock_seconds\n";
  for (const auto& rec : state.history) {
    loss << rec.epoch << '\t' << format_double(rec.mean_loss) << '\t'
         << format_double(rec.seconds, 6) << '\n';
  }
  write_file(out_dir / "loss.tsv", loss.str());
  out << "checkpoint written to " << (out_dir / "model.ckpt").string() << "\n";
  return kOk;
}

Checkpoint load_matching_checkpoint(const RunConfig& cfg, const LooSplit& split) {
  auto path = checkpoint_path(cfg);
  require_file(path, "checkpoint");
  auto ckpt = read_checkpoint(path);
  if (ckpt.params.num_items != split.num_items()) {
    std::ostringstream msg;
    msg << "checkpoint/split mismatch: checkpoint has " << ckpt.params.num_items << " items (k="
        << ckpt.params.hyper.aspects() << ", d=" << ckpt.params.hyper.d << "), split has "
        << split.num_users() << " users x " << split.num_items() << " items";
    throw Error(msg.str());
  }
  return ckpt;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  auto split = load_split(cfg);
  auto ckpt = load_matching_checkpoint(cfg, split);
  auto opts = cfg.eval();
  fs::path dir = cfg.get("report_dir").empty() ? fs::path(cfg.get("out_dir")) / "eval"
                                               : fs::path(cfg.get("report_dir"));
  auto header = header_for("evaluate", cfg);

  auto report = evaluate(ckpt.params, split, opts);
  report.config_echo = cfg.canonical(true);
  write_report(dir, report, split, header);
  out << format_report(report);

  auto ratios = cfg.ratios();
  if (!ratios.empty()) {
    auto rows = robustness_sweep(ckpt.params, split, ratios, opts);
    write_sweep(dir / "sweep.tsv", rows, header);
    out << "\nrelation ratio sweep\n";
    for (const auto& row : rows) {
      out << "  ratio " << format_double(row.ratio, 4);
      for (const auto& [cutoff, hr] : row.hr) {
        out << "  HR@" << cutoff << " " << format_double(hr, 4) << "  nDCG@" << cutoff << " "
            << format_double(row.ndcg.at(cutoff), 4);
      }
      out << "\n";
    }
  }
  out << "report written to " << dir.string() << "\n";
  return kOk;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  if (path.empty()) return lines;
  require_file(path, "list file");
  for (auto& line : split_string(read_file(path), '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

int cmd_export(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto split = load_split(cfg);
  auto ckpt = load_matching_checkpoint(cfg, split);
  std::vector<RawPair> pairs;
  for (const auto& line : read_lines(cfg.get("pairs"))) {
    char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    auto f = split_string(line, delim);
    if (f.size() != 2) throw Error("pairs file: expected two ids per line, got '" + line + "'");
    pairs.push_back({f[0], f[1]});
  }
  auto users = read_lines(cfg.get("users"));
  fs::path dir = cfg.get("out_dir");
  auto summary = export_embeddings(ckpt.params, pairs, users, split, dir, header_for("export", cfg));
  for (const auto& w : summary.warnings) err << "warning: " << w << "\n";
  if (cfg.get_bool("export_tensors")) export_checkpoint_text(ckpt.params, dir / "tensors");
  out << "relations " << summary.relations_written << ", users " << summary.users_written
      << ", skipped " << summary.skipped << "\n";
  return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  auto data = generate_synthetic(cfg.synthetic());
  const auto& ds = data.dataset;
  std::ostringstream text, genres;
  auto header = header_for("synth", cfg);
  text << "# " << header << "\n";
  genres << "# " << header << "\n" << "item\tgenre\n";
  for (Index u = 0; u < ds.num_users; ++u) {
    for (Index i : ds.positives[u]) text << ds.users.raw(u) << '\t' << ds.items.raw(i) << '\n';
  }
  for (Index i = 0; i < ds.num_items; ++i) genres << ds.items.raw(i) << '\t' << data.item_genre[i] << '\n';
  fs::path path = cfg.get("synth_output");
  write_file(path, text.str());
  write_file(fs::path(path.string() + ".genres.tsv"), genres.str());
  out << "wrote " << ds.num_actions() << " interactions for " << ds.num_users << " users to "
      << path.string() << " (columns user,item)\n";
  return kOk;
}

struct Command {
  std::string_view name;
  std::string_view summary;
  int (*fn)(const RunConfig&, std::ostream&, std::ostream&);
};

constexpr Command kCommands[] = {
    {"prepare", "filter raw interactions and write the leave-one-out split", cmd_prepare},
    {"train", "train a model on a prepared split", cmd_train},
    {"evaluate", "HR@N / nDCG@N report, sparsity groups and ratio sweep", cmd_evaluate},
    {"export", "write relation and user embeddings as TSV", cmd_export},
    {"synth", "generate a planted-genre synthetic interaction file", cmd_synth},
};

}  // namespace

std::string help_text() {
  std::ostringstream out;
  out << "usage: reda <command> [--config FILE] [--KEY VALUE | --KEY=VALUE]...\n\ncommands:\n";
  for (const auto& c : kCommands) {
    std::string name(c.name);
    name.resize(10, ' ');
    out << "  " << name << c.summary << "\n";
  }
  out << "\nconfig keys (file: 'key = value' lines; flags override the file):\n";
  std::string_view group;
  for (const auto& k : RunConfig::keys()) {
    if (k.group != group) {
      group = k.group;
      out << "\n [" << group << "]\n";
    }
    std::string lhs = "  --" + std::string(k.name) + " " +
                      (k.default_value.empty() ? std::string("\"\"") : std::string(k.default_value));
    if (lhs.size() < 36) lhs.resize(36, ' ');
    else lhs += "  ";
    out << lhs << k.help << "\n";
  }
  out << "\nexit codes: 0 success, 1 runtime failure, 2 usage or config error\n";
  return out.str();
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    (args.empty() ? err : out) << help_text();
    return args.empty() ? kUsageError : kOk;
  }
  const Command* command = nullptr;
  for (const auto& c : kCommands) {
    if (c.name == args[0]) command = &c;
  }
  if (!command) {
    err << "unknown command '" << args[0] << "'\n\n" << help_text();
    return kUsageError;
  }

  try {
    std::vector<std::string> problems;
    std::optional<std::string> config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t n = 1; n < args.size(); ++n) {
      const std::string& a = args[n];
      if (a == "--help" || a == "-h") {
        out << help_text();
        return kOk;
      }
      if (a.rfind("--", 0) != 0) {
        problems.push_back("unexpected argument '" + a + "'");
        continue;
      }
      std::string key = a.substr(2);
      std::string value;
      if (auto eq = key.find('='); eq != std::string::npos) {
        value = key.substr(eq + 1);
        key.resize(eq);
      } else if (n + 1 < args.size()) {
        value = args[++n];
      } else {
        problems.push_back("missing value for --" + key);
        continue;
      }
      if (key == "config") {
        config_file = value;
      } else if (!RunConfig::is_key(key)) {
        problems.push_back("unknown option --" + key);
      } else {
        overrides.emplace_back(key, value);
      }
    }

    RunConfig cfg;
    if (config_file) {
      require_file(*config_file, "config file");
      cfg = RunConfig::load(*config_file);
    }
    for (auto& [key, value] : overrides) cfg.set(key, value);
    if (const char* env = std::getenv("REDA_THREADS"); env && *env) cfg.set("threads", env);
    for (auto& p : cfg.validate()) problems.push_back(std::move(p));
    if (!problems.empty()) {
      err << "configuration errors:\n";
      for (const auto& p : problems) err << "  " << p << "\n";
      return kUsageError;
    }
    return command->fn(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace reda::cli
