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
#include <span>
#include <vector>

#include "hurmacl/autograd.hpp"

namespace hurmacl::ops {

// Elementwise / scalar arithmetic.
template <typename T> Var add(Graph<T>& g, Var a, Var b);
template <typename T> Var mul(Graph<T>& g, Var a, Var b);
// Scaling by an exact zero records a node that never propagates.
template <typename T> Var scale(Graph<T>& g, Var a, T s);
template <typename T> Var leaky_relu(Graph<T>& g, Var x, T slope);
template <typename T> Var silu(Graph<T>& g, Var x);
template <typename T> Var softplus(Graph<T>& g, Var x);

// Feature maps are [K, H, W].
// Stride-1 convolution, weight [Cout, Cin, k, k], bias [Cout].
template <typename T> Var conv2d(Graph<T>& g, Var x, Var w, Var b, int pad);
// 2x2 stride-2 transposed convolution, weight [Cin, Cout, 2, 2], bias [Cout].
template <typename T> Var conv_transpose2x2(Graph<T>& g, Var x, Var w, Var b);
template <typename T> Var instance_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps);
template <typename T> Var max_pool2(Graph<T>& g, Var x);
template <typename T> Var concat_channels(Graph<T>& g, Var a, Var b);
// Softmax over the leading (category) axis of [C, H, W].
template <typename T> Var softmax_channels(Graph<T>& g, Var logits);
// Multiplies every channel by a constant binary [H, W] mask.
template <typename T> Var apply_mask(Graph<T>& g, Var x, std::span<const std::uint8_t> mask);

// Token matrices are [L, E].
// x [L, In], w [Out, In], b [Out] (b may be invalid for no bias).
template <typename T> Var linear(Graph<T>& g, Var x, Var w, Var b);
template <typename T> Var layer_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps);
// [C, H, W] -> [L, ph*pw*C], raster patch order, (py, px, c) inside a patch.
template <typename T> Var patchify(Graph<T>& g, Var x, int ph, int pw);
template <typename T> Var unpatchify(Graph<T>& g, Var tokens, int channels, int height,
                                     int width, int ph, int pw);

enum class ScanDirection { kForward, kBackward };

// Selective-scan recurrence with per-token step sizes:
//   A = -exp(a_log), h_t = exp(delta_t * A) * h_{t-1} + delta_t * B_t * x_t,
//   y_t = <C_t, h_t> + d_skip * x_t.
// x, delta [L, E]; b, c [L, N]; a_log [E, N]; d_skip [E]. kBackward runs the
// same recurrence from the last token to the first.
template <typename T>
Var selective_scan_core(Graph<T>& g, Var x, Var delta, Var b, Var c, Var a_log, Var d_skip,
                        ScanDirection dir);

// Deformable convolution, stride 1, zero padding k/2, single offset group.
// offsets [2*k*k, H, W] hold (dy, dx) per tap; samples are bilinear with
// zero-valued out-of-range corners.
template <typename T>
Var deform_conv2d(Graph<T>& g, Var x, Var offsets, Var w, Var b);

// Bilinear interpolation of every channel of [K, H, W] at (y, x).
template <typename T>
std::vector<T> bilinear_sample(const Tensor<T>& grid, T y, T x);

template <typename T>
struct SegLoss {
  Var loss;
  bool empty = false;  // include mask selected no pixel; loss is a constant 0
  double ce = 0;
  double dice = 0;
};

inline constexpr double kDiceSmooth = 1e-5;
inline constexpr double kProbFloor = 1e-12;

// 0.5 * mean CE + 0.5 * (1 - mean soft Dice over categories 1..C-1), both
// restricted to pixels where include is non-zero (empty span = all pixels).
template <typename T>
SegLoss<T> seg_loss(Graph<T>& g, Var probs, std::span<const std::int32_t> labels,
                    std::span<const std::uint8_t> include);

enum class Student { kFirst, kSecond };

// (1/normalizer) * sum over selected pixels of KL(p || q), gradient routed to
// the student side only (the teacher is treated as a constant). Returns a
// constant 0 when normalizer == 0.
template <typename T>
Var masked_kl(Graph<T>& g, Var p, Var q, std::span<const std::uint8_t> select,
              double normalizer, Student student);

}  // namespace hurmacl::ops
