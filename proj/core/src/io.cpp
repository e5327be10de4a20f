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

#include "reda/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "reda/error.hpp"

namespace reda {

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("error while writing " + path.string());
}

std::vector<std::string> split_string(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

namespace {

std::string comment(const std::string& header) {
  return header.empty() ? std::string() : "# " + header + "\n";
}

template <typename T>
T to_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, path.filename().string() + ": bad number '" + s + "'");
  }
  return v;
}

// Calls fn(fields, line_no) for each non-comment, non-blank line.
template <typename Fn>
void for_each_row(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(split_string(line, '\t'), line_no);
  }
}

}  // namespace

void write_split(const std::filesystem::path& dir, const LooSplit& split,
                 const std::string& header) {
  std::filesystem::create_directories(dir);
  const auto& train = split.train;
  std::ostringstream tr, te, ng, ids;
  tr << comment(header) << "user\titem\n";
  te << comment(header) << "user\titem\n";
  ng << comment(header) << "user\tnegatives\n";
  ids << comment(header) << "kind\traw_id\tindex\n";
  for (Index u = 0; u < train.num_users; ++u) {
    for (Index i : train.positives[u]) tr << u << '\t' << i << '\n';
    te << u << '\t' << split.test[u] << '\n';
    ng << u;
    for (Index i : split.eval_negatives[u]) ng << '\t' << i;
    ng << '\n';
    ids << "user\t" << train.users.raw(u) << '\t' << u << '\n';
  }
  for (Index i = 0; i < train.num_items; ++i) ids << "item\t" << train.items.raw(i) << '\t' << i << '\n';
  write_file(dir / "train.tsv", tr.str());
  write_file(dir / "test.tsv", te.str());
  write_file(dir / "negatives.tsv", ng.str());
  write_file(dir / "idmap.tsv", ids.str());
}

LooSplit read_split(const std::filesystem::path& dir) {
  LooSplit split;
  auto& train = split.train;

  auto idmap = dir / "idmap.tsv";
  bool header = true;
  for_each_row(idmap, [&](const std::vector<std::string>& f, std::size_t line) {
    if (header) {
      header = false;
      return;
    }
    if (f.size() != 3) throw ParseError(line, "idmap.tsv: expected 3 columns");
    auto index = to_number<Index>(f[2], idmap, line);
    IdMap& map = f[0] == "user" ? train.users : train.items;
    if (f[0] != "user" && f[0] != "item") throw ParseError(line, "idmap.tsv: bad kind " + f[0]);
    if (map.insert(f[1]) != index) throw ParseError(line, "idmap.tsv: indices are not dense");
  });
  train.num_users = train.users.size();
  train.num_items = train.items.size();
  train.positives.resize(train.num_users);
  split.test.assign(train.num_users, 0);
  split.eval_negatives.resize(train.num_users);

  auto check_user = [&](Index u, std::size_t line) {
    if (u >= train.num_users) throw ParseError(line, "user index out of range");
  };
  auto check_item = [&](Index i, std::size_t line) {
    if (i >= train.num_items) throw ParseError(line, "item index out of range");
  };

  auto path = dir / "train.tsv";
  header = true;
  for_each_row(path, [&](const std::vector<std::string>& f, std::size_t line) {
    if (std::exchange(header, false)) return;
    if (f.size() != 2) throw ParseError(line, "train.tsv: expected 2 columns");
    auto u = to_number<Index>(f[0], path, line);
    auto i = to_number<Index>(f[1], path, line);
    check_user(u, line);
    check_item(i, line);
    train.positives[u].push_back(i);
  });

  path = dir / "test.tsv";
  header = true;
  std::vector<char> seen(train.num_users, 0);
  for_each_row(path, [&](const std::vector<std::string>& f, std::size_t line) {
    if (std::exchange(header, false)) return;
    if (f.size() != 2) throw ParseError(line, "test.tsv: expected 2 columns");
    auto u = to_number<Index>(f[0], path, line);
    auto i = to_number<Index>(f[1], path, line);
    check_user(u, line);
    check_item(i, line);
    split.test[u] = i;
    seen[u] = 1;
  });
  for (Index u = 0; u < train.num_users; ++u) {
    if (!seen[u]) throw DataError("test.tsv has no held-out item for user " + train.users.raw(u));
  }

  path = dir / "negatives.tsv";
  header = true;
  for_each_row(path, [&](const std::vector<std::string>& f, std::size_t line) {
    if (std::exchange(header, false)) return;
    auto u = to_number<Index>(f[0], path, line);
    check_user(u, line);
    auto& negs = split.eval_negatives[u];
    for (std::size_t n = 1; n < f.size(); ++n) {
      auto i = to_number<Index>(f[n], path, line);
      check_item(i, line);
      negs.push_back(i);
    }
  });
  return split;
}

void write_dataset_stats(const std::filesystem::path& path, const Dataset& ds,
                         const std::string& header) {
  std::ostringstream out;
  out << comment(header) << "users\titems\tactions\tdensity_percent\n";
  out << ds.num_users << '\t' << ds.num_items << '\t' << ds.num_actions() << '\t'
      << format_double(100.0 * ds.density(), 6) << '\n';
  write_file(path, out.str());
}

void write_report(const std::filesystem::path& dir, const EvalReport& report,
                  const LooSplit& split, const std::string& header) {
  std::ostringstream out;
  out << comment(header);
  for (const auto& line : split_string(report.config_echo, '\n')) {
    if (!line.empty()) out << "# config: " << line << "\n";
  }
  out << "# degenerate_users=" << report.degenerate_users << "\n";
  out << "section\tlabel\tcutoff\tusers\thits\thr\tndcg\n";
  auto emit = [&](const char* section, const MetricRow& row) {
    for (std::size_t cutoff : report.cutoffs) {
      out << section << '\t' << row.label << '\t' << cutoff << '\t' << row.users << '\t'
          << row.hits.at(cutoff) << '\t';
      if (row.users == 0) {
        out << "NA\tNA\n";
      } else {
        out << format_double(row.hr.at(cutoff)) << '\t' << format_double(row.ndcg.at(cutoff))
            << '\n';
      }
    }
  };
  auto all = summarize(report.per_user, report.cutoffs);
  emit("all", all);
  for (const auto& g : report.groups) emit("group", g);
  write_file(dir / "report.tsv", out.str());

  std::ostringstream pu;
  pu << comment(header) << "user\traw_id\thistory_size\trank\n";
  for (const auto& u : report.per_user) {
    pu << u.user << '\t' << split.train.users.raw(u.user) << '\t' << u.history_size << '\t'
       << u.rank << '\n';
  }
  write_file(dir / "per_user.tsv", pu.str());
}

std::vector<UserResult> read_per_user(const std::filesystem::path& path) {
  std::vector<UserResult> out;
  bool header = true;
  for_each_row(path, [&](const std::vector<std::string>& f, std::size_t line) {
    if (std::exchange(header, false)) return;
    if (f.size() != 4) throw ParseError(line, "per_user.tsv: expected 4 columns");
    out.push_back({to_number<Index>(f[0], path, line), to_number<std::size_t>(f[2], path, line),
                   to_number<std::size_t>(f[3], path, line)});
  });
  return out;
}

std::vector<ReportRow> read_report(const std::filesystem::path& path) {
  std::vector<ReportRow> out;
  bool header = true;
  for_each_row(path, [&](const std::vector<std::string>& f, std::size_t line) {
    if (std::exchange(header, false)) return;
    if (f.size() != 7) throw ParseError(line, "report.tsv: expected 7 columns");
    out.push_back({f[0], f[1], to_number<std::size_t>(f[2], path, line),
                   to_number<std::size_t>(f[3], path, line),
                   to_number<std::size_t>(f[4], path, line), f[5], f[6]});
  });
  return out;
}

void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                 const std::string& header) {
  std::ostringstream out;
  out << comment(header) << "ratio\tcutoff\thr\tndcg\n";
  for (const auto& row : rows) {
    for (const auto& [cutoff, hr] : row.hr) {
      out << format_double(row.ratio, 6) << '\t' << cutoff << '\t' << format_double(hr) << '\t'
          << format_double(row.ndcg.at(cutoff)) << '\n';
    }
  }
  write_file(path, out.str());
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-10s %6s %7s %8s %8s\n", "group", "N", "users", "HR", "nDCG");
  out << buf;
  auto emit = [&](const MetricRow& row) {
    for (std::size_t cutoff : report.cutoffs) {
      if (row.users == 0) {
        std::snprintf(buf, sizeof(buf), "%-10s %6zu %7zu %8s %8s\n", row.label.c_str(), cutoff,
                      row.users, "-", "-");
      } else {
        std::snprintf(buf, sizeof(buf), "%-10s %6zu %7zu %8.4f %8.4f\n", row.label.c_str(),
                      cutoff, row.users, row.hr.at(cutoff), row.ndcg.at(cutoff));
      }
      out << buf;
    }
  };
  emit(summarize(report.per_user, report.cutoffs));
  for (const auto& g : report.groups) emit(g);
  if (report.degenerate_users > 0) {
    out << "degenerate users (empty history): " << report.degenerate_users << "\n";
  }
  return out.str();
}

}  // namespace reda
