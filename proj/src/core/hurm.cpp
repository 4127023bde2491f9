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

#include "hurmacl/hurm.hpp"

#include <algorithm>
#include <cmath>

namespace hurmacl {

std::size_t HardMask::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

HardMask HardMask::all(int height, int width, std::uint8_t v) {
  HardMask m;
  m.height = height;
  m.width = width;
  m.mask.assign(static_cast<std::size_t>(height) * width, v);
  return m;
}

template <typename T>
UncertaintyMap uncertainty_map(const Tensor<T>& probs) {
  require(probs.rank() == 3, "uncertainty_map: expects [C,H,W]");
  const int c = probs.dim(0);
  if (c < 2) fail(ErrorCode::kConfig, "uncertainty_map: needs at least 2 categories");
  UncertaintyMap u;
  u.height = probs.dim(1);
  u.width = probs.dim(2);
  const std::size_t hw = static_cast<std::size_t>(u.height) * u.width;
  u.values.resize(hw);
  const double norm = std::log(static_cast<double>(c));
  for (std::size_t p = 0; p < hw; ++p) {
    double h = 0;
    bool uniform = true;
    for (int k = 0; k < c; ++k) {
      uniform = uniform && probs[k * hw + p] == probs[p];
      const double y = probs[k * hw + p];
      if (y > 0) h -= y * std::log(y);
    }
    // Equal probabilities are the maximum-entropy point; pin it to exactly 1.
    u.values[p] = uniform ? 1.0 : std::clamp(h / norm, 0.0, 1.0);
  }
  return u;
}

HardMask binarize(const UncertaintyMap& u, double threshold) {
  require(threshold >= 0, "binarize: threshold must be >= 0");
  HardMask m;
  m.height = u.height;
  m.width = u.width;
  m.threshold = threshold;
  m.mask.resize(u.values.size());
  for (std::size_t p = 0; p < u.values.size(); ++p) m.mask[p] = u.values[p] > threshold ? 1 : 0;
  return m;
}

template <typename T>
MaskedProbs<T> mask_probs(const Tensor<T>& probs, const HardMask& mask) {
  require(probs.rank() == 3 && probs.dim(1) == mask.height && probs.dim(2) == mask.width,
          "mask_probs: mask does not match probabilities");
  MaskedProbs<T> out{Tensor<T>(probs.shape()), 0};
  const std::size_t hw = mask.mask.size();
  for (std::size_t p = 0; p < hw; ++p) {
    if (!mask.mask[p]) {
      ++out.masked_count;
      continue;
    }
    for (int k = 0; k < probs.dim(0); ++k) out.probs[k * hw + p] = probs[k * hw + p];
  }
  return out;
}

template UncertaintyMap uncertainty_map<float>(const Tensor<float>&);
template UncertaintyMap uncertainty_map<double>(const Tensor<double>&);
template MaskedProbs<float> mask_probs<float>(const Tensor<float>&, const HardMask&);
template MaskedProbs<double> mask_probs<double>(const Tensor<double>&, const HardMask&);

}  // namespace hurmacl
