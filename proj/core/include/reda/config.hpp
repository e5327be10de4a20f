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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reda/data.hpp"
#include "reda/evaluation.hpp"
#include "reda/model.hpp"
#include "reda/training.hpp"

namespace reda {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view group;
  std::string_view help;
  // Paths and thread counts do not change results and stay out of the hash.
  bool hashed = true;
};

// Flat `key = value` run configuration. Every key has a default; unknown
// keys are rejected.
class RunConfig {
 public:
  RunConfig();  // all defaults

  static std::span<const ConfigKey> keys();
  static bool is_key(std::string_view name);

  // Parses `key = value` lines; '#' starts a comment. Every problem in the
  // text is reported in a single ConfigError.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  void set(std::string_view key, std::string value);  // ConfigError if unknown
  const std::string& get(std::string_view key) const;

  // One `key = value` line per key in declaration order. With
  // `hashed_only`, paths and other keys outside the hash are left out.
  std::string canonical(bool hashed_only = false) const;
  // FNV-1a over the canonical form of hashed keys.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  // Every type or range problem, empty when valid.
  std::vector<std::string> validate() const;

  // Typed views; call validate() first.
  ColumnSchema schema() const;
  FilterOptions filter() const;
  HoldoutPolicy holdout() const;
  HyperParams hyper() const;
  TrainConfig train() const;
  EvalOptions eval() const;
  std::vector<double> ratios() const;
  SyntheticSpec synthetic() const;

  std::size_t get_size(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

std::string hex64(std::uint64_t v);

// Parses "a,b,c" into numbers.
std::vector<std::size_t> parse_size_list(std::string_view s);
std::vector<double> parse_double_list(std::string_view s);

}  // namespace reda
