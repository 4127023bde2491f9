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

#include "hurmacl/autograd.hpp"
#include "hurmacl/core_data.hpp"
#include "hurmacl/hurm.hpp"

namespace hurmacl {

// m(h,w) = 1 where the ViM branch is the more reliable teacher.
struct DirectionMatrix {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> m;
  std::size_t count_m = 0;  // sum of m
  std::size_t count_g = 0;  // pixels masked out by HURM
};

// ce(h,w) = -log max(P(label), 1e-12)
template <typename T>
std::vector<double> pixel_ce(const Tensor<T>& probs, const LabelGrid& labels);

// m = 1 on hard pixels where ce_vim < ce_dcnn (strict); 0 elsewhere.
DirectionMatrix direction_matrix(std::span<const double> ce_vim, std::span<const double> ce_dcnn,
                                 const HardMask& hard);

// KL(p || q) per pixel with 1e-12 floors.
template <typename T>
std::vector<double> kl_map(const Tensor<T>& p, const Tensor<T>& q);

template <typename T>
struct HfdLosses {
  Var vim_student;   // L_P^M: hard pixels with m = 0, DCNN teacher detached
  Var dcnn_student;  // L_P^D: pixels with m = 1, ViM teacher detached
  Var total;         // loss_3
};

// Normalizers: H*W - M - G for the ViM-student term and M for the
// DCNN-student term; a zero normalizer makes that term 0. Both terms use
// KL(P^M || P^D); only the student side receives gradient.
template <typename T>
HfdLosses<T> hfd_losses(Graph<T>& g, Var vim_probs, Var dcnn_probs, const DirectionMatrix& dir,
                        const HardMask& hard);

struct HfdValues {
  double vim_student = 0;
  double dcnn_student = 0;
  double total = 0;
  DirectionMatrix direction;
};

// Value-level convenience: derives the direction matrix from labels, then
// evaluates the losses.
template <typename T>
HfdValues hfd_values(const Tensor<T>& vim_probs, const Tensor<T>& dcnn_probs,
                     const LabelGrid& labels, const HardMask& hard);

}  // namespace hurmacl
