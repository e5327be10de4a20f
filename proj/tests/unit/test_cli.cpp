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

#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "reda/checkpoint.hpp"
#include "reda/config.hpp"
#include "reda/io.hpp"

namespace reda {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() /
          ("reda_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  // Small synthetic corpus prepared into data/.
  void prepare_small(std::vector<std::string> synth_extra = {}) {
    std::vector<std::string> synth{"synth",        "--synth_users",  "40",
                                   "--synth_items", "120",           "--synth_genres",
                                   "10",            "--synth_output", p("inter.tsv")};
    synth.insert(synth.end(), synth_extra.begin(), synth_extra.end());
    ASSERT_EQ(run(synth).code, 0);
    auto r = run({"prepare", "--input", p("inter.tsv"), "--columns", "user,item", "--n_neg", "50",
                  "--data_dir", p("data")});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::vector<std::string> model_flags() const {
    return {"--d", "6", "--k", "2", "--m", "3", "--s", "4", "--batch_size", "64",
            "--learning_rate", "0.01", "--data_dir", p("data")};
  }

  Result train(std::vector<std::string> extra) {
    std::vector<std::string> args{"train"};
    auto flags = model_flags();
    args.insert(args.end(), flags.begin(), flags.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir;
};

TEST(CliHelp, MatchesGolden) {
  auto golden = read_file(fs::path(REDA_GOLDEN_DIR) / "help.txt");
  EXPECT_EQ(cli::help_text(), golden);
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, golden);
  for (const auto& k : RunConfig::keys()) {
    EXPECT_NE(golden.find("--" + std::string(k.name) + " "), std::string::npos) << k.name;
  }
}

TEST(CliUsage, ErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"train", "--not_a_key", "1"}).code, 2);
  EXPECT_EQ(run({"train", "--d"}).code, 2);
  EXPECT_EQ(run({"train", "--d", "zero"}).code, 2);
  EXPECT_EQ(run({"train", "stray"}).code, 2);
  auto missing = run({"prepare", "--input", "/nonexistent/input.tsv"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("/nonexistent/input.tsv"), std::string::npos);
  EXPECT_EQ(run({"train", "--config", "/nonexistent/run.conf"}).code, 2);
}

TEST_F(CliTest, PrepareWritesSplitAndStats) {
  prepare_small();
  for (auto f : {"train.tsv", "test.tsv", "negatives.tsv", "idmap.tsv", "dataset_stats.tsv"}) {
    EXPECT_TRUE(fs::exists(dir / "data" / f)) << f;
  }
  auto split = read_split(dir / "data");
  EXPECT_EQ(split.num_users(), 40u);
  for (const auto& negs : split.eval_negatives) EXPECT_EQ(negs.size(), 50u);
  auto stats = read_file(dir / "data" / "dataset_stats.tsv");
  EXPECT_NE(stats.find("users\titems\tactions\tdensity_percent"), std::string::npos);
}

TEST_F(CliTest, PrepareIsDeterministic) {
  prepare_small();
  auto first = read_file(dir / "data" / "negatives.tsv");
  auto r = run({"prepare", "--input", p("inter.tsv"), "--columns", "user,item", "--n_neg", "50",
                "--data_dir", p("data2")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_file(dir / "data2" / "negatives.tsv"), first);
  EXPECT_EQ(read_file(dir / "data2" / "train.tsv"), read_file(dir / "data" / "train.tsv"));
}

TEST_F(CliTest, PrepareReportsMalformedLines) {
  write_file(dir / "bad.tsv", "a\tx\t5\na\ty\nb\tx\t4\n");
  auto r = run({"prepare", "--input", p("bad.tsv"), "--min_actions", "1", "--data_dir", p("d"),
                "--n_neg", "0"});
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, ZeroEpochsWritesInitialModel) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "0", "--out_dir", p("run")}).code, 0);
  auto ckpt = read_checkpoint(dir / "run" / "model.ckpt");
  RunConfig cfg;
  for (std::size_t n = 0; n + 1 < model_flags().size(); n += 2) {
    cfg.set(model_flags()[n].substr(2), model_flags()[n + 1]);
  }
  auto init = ModelParams::random(ckpt.params.num_items, cfg.hyper(), cfg.train().seed,
                                  cfg.train().init_stddev);
  EXPECT_EQ(ckpt.params, init);
  EXPECT_EQ(ckpt.epochs_done, 0u);
}

TEST_F(CliTest, MemoryAblationLeavesMemoryUntouched) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "0", "--ablation", "nmal", "--out_dir", p("a")}).code, 0);
  ASSERT_EQ(train({"--epochs", "2", "--ablation", "nmal", "--out_dir", p("b")}).code, 0);
  auto a = read_checkpoint(dir / "a" / "model.ckpt"), b = read_checkpoint(dir / "b" / "model.ckpt");
  EXPECT_EQ(a.params.memory_keys, b.params.memory_keys);
  EXPECT_EQ(a.params.memory_values, b.params.memory_values);
  EXPECT_NE(a.params.item_aspects, b.params.item_aspects);
}

TEST_F(CliTest, ResumeIsByteIdentical) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "5", "--out_dir", p("straight")}).code, 0);
  ASSERT_EQ(train({"--epochs", "2", "--out_dir", p("first")}).code, 0);
  auto r = train({"--epochs", "5", "--out_dir", p("second"), "--resume", p("first/model.ckpt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "second" / "model.ckpt"), read_file(dir / "straight" / "model.ckpt"));

  // A checkpoint for another model shape is refused.
  auto bad = train({"--epochs", "5", "--d", "8", "--out_dir", p("x"), "--resume",
                    p("first/model.ckpt")});
  EXPECT_EQ(bad.code, 1);
}

TEST_F(CliTest, TrainWritesLossHistoryAndPeriodicCheckpoints) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "4", "--checkpoint_every", "2", "--out_dir", p("run")}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "model-epoch2.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run" / "model-epoch4.ckpt"));
  auto lines = split_string(read_file(dir / "run" / "loss.tsv"), '\n');
  ASSERT_GE(lines.size(), 6u);
  EXPECT_EQ(lines[0].rfind("# reda train config=", 0), 0u);
  EXPECT_EQ(lines[1], "epoch\tmean_loss\twall_clock_seconds");
  EXPECT_EQ(split_string(lines[5], '\t')[0], "4");
}

TEST_F(CliTest, PerfectCheckpointRanksHeldOutFirst) {
  // Genres of exactly items_per_user items with p = 1: each user owns a whole
  // genre, so the held-out item is the only candidate from that genre.
  prepare_small({"--synth_items_per_user", "12", "--synth_genre_prob", "1"});
  auto split = read_split(dir / "data");
  HyperParams h;
  h.d = 10;
  h.k = 1;
  h.m = 1;
  h.s = 1;
  h.ablation = Ablation::kNmal;
  Checkpoint ckpt;
  ckpt.params = ModelParams(split.num_items(), h);
  auto genres = split_string(read_file(p("inter.tsv") + ".genres.tsv"), '\n');
  for (const auto& line : genres) {
    auto f = split_string(line, '\t');
    if (f.size() != 2 || f[0] == "item" || line[0] == '#') continue;
    if (auto item = split.train.items.find(f[0])) ckpt.params.item_aspects(*item, std::stoul(f[1])) = 1.0;
  }
  write_checkpoint(dir / "perfect.ckpt", ckpt);

  auto r = run({"evaluate", "--data_dir", p("data"), "--checkpoint", p("perfect.ckpt"), "--d", "10",
                "--k", "1", "--m", "1", "--s", "1", "--ablation", "nmal", "--report_dir", p("eval")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = read_report(dir / "eval" / "report.tsv");
  bool seen = false;
  for (const auto& row : rows) {
    if (row.section == "all" && row.cutoff == 10) {
      EXPECT_EQ(row.hr, "1");
      EXPECT_EQ(row.ndcg, "1");
      seen = true;
    }
  }
  EXPECT_TRUE(seen);
}

TEST_F(CliTest, EvaluateReportRecomputesFromPerUser) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "2", "--out_dir", p("run")}).code, 0);
  std::vector<std::string> args{"evaluate", "--out_dir", p("run"), "--ratios", "1.0,0.5"};
  auto flags = model_flags();
  args.insert(args.end(), flags.begin(), flags.end());
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;

  auto per_user = read_per_user(dir / "run" / "eval" / "per_user.tsv");
  ASSERT_EQ(per_user.size(), 40u);
  std::vector<std::size_t> cutoffs{5, 10};
  auto recomputed = summarize(per_user, cutoffs);
  auto rows = read_report(dir / "run" / "eval" / "report.tsv");
  std::size_t group_users = 0;
  for (const auto& row : rows) {
    if (row.section == "all") {
      EXPECT_EQ(row.hits, recomputed.hits.at(row.cutoff));
      EXPECT_EQ(std::stod(row.hr), recomputed.hr.at(row.cutoff));
      EXPECT_NEAR(std::stod(row.ndcg), recomputed.ndcg.at(row.cutoff), 1e-15);
    } else if (row.cutoff == 10) {
      group_users += row.users;
    }
  }
  EXPECT_EQ(group_users, 40u);

  // The ratio 1.0 sweep row equals the plain evaluation.
  auto sweep = split_string(read_file(dir / "run" / "eval" / "sweep.tsv"), '\n');
  bool matched = false;
  for (const auto& line : sweep) {
    auto f = split_string(line, '\t');
    if (f.size() == 4 && f[0] == "1" && f[1] == "10") {
      EXPECT_EQ(std::stod(f[2]), recomputed.hr.at(10));
      matched = true;
    }
  }
  EXPECT_TRUE(matched);
}

TEST_F(CliTest, EvaluateRejectsMismatchedCheckpoint) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "0", "--out_dir", p("run")}).code, 0);
  ASSERT_EQ(run({"synth", "--synth_users", "30", "--synth_items", "60", "--synth_genres", "5",
                 "--synth_output", p("other.tsv")}).code, 0);
  ASSERT_EQ(run({"prepare", "--input", p("other.tsv"), "--columns", "user,item", "--n_neg", "20",
                 "--data_dir", p("other")}).code, 0);
  auto r = run({"evaluate", "--out_dir", p("run"), "--data_dir", p("other")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("mismatch"), std::string::npos) << r.err;
}

TEST_F(CliTest, ExportSkipsUnknownIds) {
  prepare_small();
  ASSERT_EQ(train({"--epochs", "1", "--out_dir", p("run")}).code, 0);
  auto split = read_split(dir / "data");
  const auto& a = split.train.items.raw(0);
  const auto& b = split.train.items.raw(1);
  write_file(dir / "pairs.txt", a + "\t" + b + "\n" + b + "," + a + "\n" + a + "\tnope\n");
  write_file(dir / "users.txt", "u0\nghost\n");
  std::vector<std::string> args{"export", "--out_dir", p("run"), "--pairs", p("pairs.txt"),
                                "--users", p("users.txt"), "--export_tensors", "true"};
  auto flags = model_flags();
  args.insert(args.end(), flags.begin(), flags.end());
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("relations 2, users 1, skipped 2"), std::string::npos) << r.out;
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "run" / "tensors" / "memory_keys.tsv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "relations.tsv"));
}

TEST_F(CliTest, ConfigFileAndFlagsCompose) {
  prepare_small();
  write_file(dir / "run.conf", "# small model\nd = 6\nk = 2\nm = 3\ns = 4\nepochs = 3\nbatch_size = 64\n");
  auto r = run({"train", "--config", p("run.conf"), "--epochs", "1", "--data_dir", p("data"),
                "--out_dir", p("run")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_checkpoint(dir / "run" / "model.ckpt").epochs_done, 1u);
  write_file(dir / "broken.conf", "d = 6\nwhat = 1\n");
  EXPECT_EQ(run({"train", "--config", p("broken.conf")}).code, 2);
}

}  // namespace
}  // namespace reda
