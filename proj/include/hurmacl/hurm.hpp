// Copyright 2026 The hurmacl Authors
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
#include <vector>

#include "hurmacl/tensor.hpp"

namespace hurmacl {

// Normalized entropy per pixel, in [0, 1].
struct UncertaintyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

// mask[p] == 1 iff U[p] > threshold (strict).
struct HardMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> mask;
  double threshold = 0;

  std::size_t count() const;
  static HardMask all(int height, int width, std::uint8_t v);
};

// U(h,w) = -sum_c y log y / log C with 0 log 0 = 0. probs is [C, H, W].
// Throws kConfig when C < 2.
template <typename T>
UncertaintyMap uncertainty_map(const Tensor<T>& probs);

HardMask binarize(const UncertaintyMap& u, double threshold);

template <typename T>
struct MaskedProbs {
  Tensor<T> probs;  // retained pixels copied, masked pixels all-zero
  std::size_t masked_count = 0;
};

template <typename T>
MaskedProbs<T> mask_probs(const Tensor<T>& probs, const HardMask& mask);

}  // namespace hurmacl
