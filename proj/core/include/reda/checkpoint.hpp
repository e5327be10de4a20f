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
#include <filesystem>
#include <optional>
#include <span>

#include "reda/model.hpp"
#include "reda/training.hpp"

namespace reda {

// Binary layout, all integers and floats little-endian:
//   magic "REDACKPT" (8 bytes) | version u32 | flags u32
//   payload:
//     num_items d k m s ablation aggregation epochs_done config_hash adam_step  (u64 each)
//     item_aspects memory_keys memory_values mlp_weight mlp_bias mlp_output (f64)
//     if flags & kHasOptimizer: first moments then second moments, same order
//   crc32 of payload (u32)
struct Checkpoint {
  ModelParams params;
  std::optional<AdamState> adam;
  std::uint64_t epochs_done = 0;
  std::uint64_t config_hash = 0;

  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kHasOptimizer = 1;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
// Throws Error on bad magic, version, truncation or checksum mismatch.
Checkpoint decode_checkpoint(std::span<const unsigned char> bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// One TSV per tensor (<name>.tsv) in `dir`, for debugging.
void export_checkpoint_text(const ModelParams& params, const std::filesystem::path& dir);

}  // namespace reda
