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
#include <string>
#include <vector>

#include "hurmacl/autograd.hpp"
#include "hurmacl/core_data.hpp"
#include "hurmacl/ops.hpp"

namespace hurmacl {

enum class Normalization { kInstance };
enum class Activation { kLeakyRelu };

struct UNetConfig {
  int depth = 4;
  int base_channels = 16;
  int num_categories = 5;
  int kernel = 3;
  Normalization norm = Normalization::kInstance;
  Activation act = Activation::kLeakyRelu;
  double leaky_slope = 0.01;
  double norm_eps = 1e-5;

  void validate() const;
  int channels(int level) const { return base_channels << level; }
  // Input height/width must be divisible by this.
  int divisor() const { return 1 << (depth - 1); }
  void check_input(int height, int width) const;
};

// Kaiming-uniform conv kernels, zero biases, unit/zero norm affine.
template <typename T>
void init_unet_params(ParameterStore<T>& store, const UNetConfig& cfg, std::uint64_t seed);

template <typename T>
struct UNetOutput {
  Var final_logits;         // [C, H, W]
  std::vector<Var> features;  // decoder levels, coarse -> fine; last is at input resolution
};

// image: [1, H, W]
template <typename T>
UNetOutput<T> unet_forward(Graph<T>& g, Var image, ParameterStore<T>& store, const UNetConfig& cfg);

// Softmax probabilities for decoder level i (0 = coarsest). The finest level
// reuses the final prediction head, so its probabilities are the prediction's.
template <typename T>
Var level_head(Graph<T>& g, const UNetOutput<T>& out, int level, ParameterStore<T>& store,
               const UNetConfig& cfg);

// 1x1 conv + softmax over an arbitrary feature map, given explicit parameter names.
template <typename T>
Var level_head(Graph<T>& g, Var features, ParameterStore<T>& store, const std::string& weight,
               const std::string& bias);

std::string level_head_prefix(int level, const UNetConfig& cfg);

template <typename T>
Tensor<T> image_tensor(const IntensityGrid& image);

struct SegLossValue {
  double value = 0;
  double ce = 0;
  double dice = 0;
  bool empty = false;
};

// Value-level segmentation loss (see ops::seg_loss).
template <typename T>
SegLossValue seg_loss_value(const Tensor<T>& probs, const LabelGrid& labels,
                            std::span<const std::uint8_t> include = {});

}  // namespace hurmacl
