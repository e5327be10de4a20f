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

#include <filesystem>
#include <string>
#include <vector>

#include "reda/data.hpp"
#include "reda/evaluation.hpp"

namespace reda {

// printf("%.*g") of `v`; 17 digits round-trips every double.
std::string format_double(double v, int precision = 17);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// Split files: train.tsv, test.tsv, negatives.tsv and idmap.tsv, all in
// dense indices. `header` is written as a leading '#' comment.
void write_split(const std::filesystem::path& dir, const LooSplit& split,
                 const std::string& header = {});
LooSplit read_split(const std::filesystem::path& dir);

// users, items, actions and density (percent), one row.
void write_dataset_stats(const std::filesystem::path& path, const Dataset& ds,
                         const std::string& header = {});

// report.tsv (global and per-group metrics) and per_user.tsv.
void write_report(const std::filesystem::path& dir, const EvalReport& report,
                  const LooSplit& split, const std::string& header = {});
std::vector<UserResult> read_per_user(const std::filesystem::path& path);

struct ReportRow {
  std::string section;  // "all" or "group"
  std::string label;
  std::size_t cutoff = 0;
  std::size_t users = 0;
  std::size_t hits = 0;
  std::string hr;  // as written; "NA" for empty groups
  std::string ndcg;
};
std::vector<ReportRow> read_report(const std::filesystem::path& path);

void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                 const std::string& header = {});

// Human-readable summary for a terminal.
std::string format_report(const EvalReport& report);

// Splits on `delim`, keeping empty fields.
std::vector<std::string> split_string(const std::string& s, char delim);

}  // namespace reda
