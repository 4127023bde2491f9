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

#include "hurmacl/vim.hpp"

namespace hurmacl {

struct DcnnConfig {
  int layers = 3;
  int width = 32;
  int kernel = 3;
  double leaky_slope = 0.01;

  void validate() const;
};

// Offset predictor is zero-initialised so every layer starts as a plain
// k x k convolution.
template <typename T>
void init_deform_layer(ParameterStore<T>& store, const std::string& prefix, int cin, int cout,
                       int kernel, double slope, std::uint64_t seed);

// offsets = conv(input, "<prefix>.offset"); output = deformable conv with "<prefix>.w/.b".
template <typename T>
Var deform_conv(Graph<T>& g, Var input, ParameterStore<T>& store, const std::string& prefix);

template <typename T>
void init_dcnn_params(ParameterStore<T>& store, const std::string& prefix, const DcnnConfig& cfg,
                      int num_categories, std::uint64_t seed);

template <typename T>
BranchOutput<T> dcnn_predict(Graph<T>& g, Var y_masked, const HardMask& mask,
                             const LabelGrid& labels, ParameterStore<T>& store,
                             const std::string& prefix, const DcnnConfig& cfg);

// loss_2 = loss_2_1 + loss_2_2
inline double branch_loss(double vim_loss, double dcnn_loss) { return vim_loss + dcnn_loss; }

}  // namespace hurmacl
