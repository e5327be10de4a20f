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

#include "reda/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "reda/error.hpp"
#include "reda/io.hpp"

namespace reda {
namespace {

constexpr char kMagic[8] = {'R', 'E', 'D', 'A', 'C', 'K', 'P', 'T'};
constexpr std::size_t kHeaderSize = 16;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    for (double v : m.values()) f64(v);
  }

  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void matrix(Matrix& m) {
    need(8 * m.size());
    for (double& v : m.values()) v = f64();
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("checkpoint is truncated");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::span<const unsigned char> data) {
  uLong c = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(c, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  Writer payload;
  payload.u64(p.num_items);
  payload.u64(p.hyper.d);
  payload.u64(p.hyper.k);
  payload.u64(p.hyper.m);
  payload.u64(p.hyper.s);
  payload.u64(static_cast<std::uint64_t>(p.hyper.ablation));
  payload.u64(static_cast<std::uint64_t>(p.hyper.aggregation));
  payload.u64(ckpt.epochs_done);
  payload.u64(ckpt.config_hash);
  payload.u64(ckpt.adam ? ckpt.adam->step : 0);
  for (const Matrix* t : p.tensors()) payload.matrix(*t);
  if (ckpt.adam) {
    for (const auto& m : ckpt.adam->first) payload.matrix(m);
    for (const auto& m : ckpt.adam->second) payload.matrix(m);
  }

  Writer out;
  out.bytes.assign(std::begin(kMagic), std::end(kMagic));
  out.u32(Checkpoint::kVersion);
  out.u32(ckpt.adam ? Checkpoint::kHasOptimizer : 0);
  out.bytes.insert(out.bytes.end(), payload.bytes.begin(), payload.bytes.end());
  out.u32(crc(payload.bytes));
  return std::move(out.bytes);
}

Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderSize + 4 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw Error("not a REDA checkpoint");
  }
  Reader header(bytes.subspan(8, 8));
  std::uint32_t version = header.u32();
  std::uint32_t flags = header.u32();
  if (version != Checkpoint::kVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  auto payload = bytes.subspan(kHeaderSize, bytes.size() - kHeaderSize - 4);
  Reader trailer(bytes.subspan(bytes.size() - 4));
  if (trailer.u32() != crc(payload)) throw Error("checkpoint checksum mismatch");

  Reader in(payload);
  std::size_t num_items = in.u64();
  HyperParams hp;
  hp.d = in.u64();
  hp.k = in.u64();
  hp.m = in.u64();
  hp.s = in.u64();
  auto ablation = in.u64();
  auto aggregation = in.u64();
  if (ablation > 2 || aggregation > 1) throw Error("checkpoint has invalid enum fields");
  hp.ablation = static_cast<Ablation>(ablation);
  hp.aggregation = static_cast<Aggregation>(aggregation);

  Checkpoint ckpt;
  ckpt.epochs_done = in.u64();
  ckpt.config_hash = in.u64();
  std::uint64_t step = in.u64();
  // Guard against absurd shapes before allocating.
  const std::size_t expected = 8 * (num_items * hp.aspects() * hp.d + 2 * hp.m * hp.d +
                                    hp.s * hp.d + 2 * hp.s);
  if (in.remaining() < expected) throw Error("checkpoint is truncated");
  ckpt.params = ModelParams(num_items, hp);
  for (Matrix* t : ckpt.params.tensors()) in.matrix(*t);
  if (flags & Checkpoint::kHasOptimizer) {
    AdamState adam(ckpt.params);
    for (auto& m : adam.first) in.matrix(m);
    for (auto& m : adam.second) in.matrix(m);
    adam.step = step;
    ckpt.adam = std::move(adam);
  }
  if (in.remaining() != 0) throw Error("checkpoint has trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  auto bytes = encode_checkpoint(ckpt);
  write_file(path, std::string(bytes.begin(), bytes.end()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  auto text = read_file(path);
  std::vector<unsigned char> bytes(text.begin(), text.end());
  return decode_checkpoint(bytes);
}

void export_checkpoint_text(const ModelParams& params, const std::filesystem::path& dir) {
  auto tensors = params.tensors();
  for (std::size_t n = 0; n < ModelParams::kTensorCount; ++n) {
    const Matrix& m = *tensors[n];
    std::ostringstream out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c) out << '\t';
        out << format_double(m(r, c));
      }
      out << '\n';
    }
    write_file(dir / (std::string(ModelParams::kTensorNames[n]) + ".tsv"), out.str());
  }
}

}  // namespace reda
