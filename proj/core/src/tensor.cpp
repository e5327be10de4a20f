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

#include "reda/tensor.hpp"

#include <cmath>
#include <limits>

namespace reda {

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

}  // namespace reda
