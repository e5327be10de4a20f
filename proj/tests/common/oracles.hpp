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

// Test-only reference computations. These deliberately avoid the library's
// helpers (softmax, dot, axpy, traces) so they can check them.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "reda/model.hpp"
#include "reda/training.hpp"

namespace reda::oracle {

inline std::vector<double> softmax(const std::vector<double>& x) {
  // Plain exp/sum in long double, no max shift; inputs in tests are small.
  long double sum = 0.0L;
  for (double v : x) sum += std::exp(static_cast<long double>(v));
  std::vector<double> out;
  for (double v : x) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / sum));
  return out;
}

inline double log_sigmoid(double x) {
  return static_cast<double>(-std::log1p(std::exp(-static_cast<long double>(x))));
}

// Direct transcription of interaction -> memory -> MLP weights -> pooling.
inline std::vector<double> relation(const ModelParams& p, Index i, Index j) {
  const std::size_t k = p.hyper.aspects(), d = p.hyper.d, m = p.hyper.m, s = p.hyper.s;
  const bool memory = p.hyper.ablation != Ablation::kNmal;
  std::vector<std::vector<double>> parts;
  std::vector<double> scores;
  for (std::size_t n = 0; n < k; ++n) {
    for (std::size_t l = 0; l < k; ++l) {
      std::vector<double> v(d);
      for (std::size_t c = 0; c < d; ++c) {
        v[c] = p.item_aspects(i, n * d + c) * p.item_aspects(j, l * d + c);
      }
      std::vector<double> part(d, 0.0);
      if (memory) {
        std::vector<double> logits(m, 0.0);
        for (std::size_t t = 0; t < m; ++t) {
          for (std::size_t c = 0; c < d; ++c) logits[t] += v[c] * p.memory_keys(t, c);
        }
        auto att = softmax(logits);
        for (std::size_t t = 0; t < m; ++t) {
          for (std::size_t c = 0; c < d; ++c) part[c] += att[t] * p.memory_values(t, c);
        }
      } else {
        part = v;
      }
      double score = 0.0;
      for (std::size_t o = 0; o < s; ++o) {
        double h = p.mlp_bias(0, o);
        for (std::size_t c = 0; c < d; ++c) h += p.mlp_weight(o, c) * v[c];
        score += p.mlp_output(0, o) * std::max(0.0, h);
      }
      parts.push_back(part);
      scores.push_back(score);
    }
  }
  auto w = softmax(scores);
  std::vector<double> r(d, 0.0);
  for (std::size_t q = 0; q < parts.size(); ++q) {
    for (std::size_t c = 0; c < d; ++c) r[c] += w[q] * parts[q][c];
  }
  return r;
}

inline double triplet_loss(const ModelParams& p, const TrainingTriplet& t) {
  auto rt = relation(p, t.target.first, t.target.second);
  auto rc = relation(p, t.context.first, t.context.second);
  auto rn = relation(p, t.negative.first, t.negative.second);
  double x = 0.0;
  for (std::size_t c = 0; c < rc.size(); ++c) x += rc[c] * rn[c] - rc[c] * rt[c];
  return log_sigmoid(x);
}

// Central difference of `f` with respect to *coord.
inline double central_difference(double& coord, const std::function<double()>& f,
                                 double step = 1e-5) {
  const double saved = coord;
  coord = saved + step;
  const double up = f();
  coord = saved - step;
  const double down = f();
  coord = saved;
  return (up - down) / (2.0 * step);
}

// |a - b| / max(|a|, |b|), with a floor on the denominator so coordinates
// whose true gradient is ~0 are judged on absolute error.
inline double relative_error(double a, double b, double floor = 1e-7) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace reda::oracle
