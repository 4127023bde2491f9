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

// Brute-force reference implementations for tests. Double precision, plain
// nested loops, no dependency on the library they check.

#include <cstdint>
#include <functional>
#include <vector>

namespace hurmacl::oracle {

using Vec = std::vector<double>;

// Row-major dense array with an explicit shape.
struct Array {
  std::vector<int> shape;
  Vec data;
};

struct ScanParams {
  int length = 0;  // L
  int channels = 0;  // E
  int state = 0;  // N
  Vec delta;  // [L][E]
  Vec b;      // [L][N]
  Vec c;      // [L][N]
  Vec a_log;  // [E][N]
  Vec d;      // [E]
};

// Literal per-step recurrence; reverse=true walks tokens from last to first.
Vec scan_reference(const Vec& x, const ScanParams& p, bool reverse);

// Zero-padded stride-1 convolution. x [Cin][H][W], w [Cout][Cin][k][k].
Vec conv2d_reference(const Vec& x, int cin, int h, int w, const Vec& weight, int cout, int k,
                     const Vec& bias);

// Deformable convolution: tap t of pixel (y, x) reads input at
// (y + t/k - k/2 + off[2t][y][x], x + t%k - k/2 + off[2t+1][y][x]) by
// bilinear interpolation with zeros outside the grid.
Vec deform_conv_reference(const Vec& x, int cin, int h, int w, const Vec& offsets,
                          const Vec& weight, int cout, int k, const Vec& bias);

// Normalized entropy per pixel of probs [C][H*W].
Vec entropy_reference(const Vec& probs, int categories, int pixels);

struct HfdReference {
  std::vector<int> m;
  double l_pm = 0;
  double l_pd = 0;
};

// Direction matrix and both distillation terms from the per-pixel
// definitions; probs are [C][H*W], hard is 0/1 per pixel.
HfdReference hfd_reference(const Vec& p_m, const Vec& p_d, const std::vector<int>& labels,
                           const std::vector<int>& hard, int categories, int pixels);

// Exact all-pairs average symmetric surface distance between the boundary
// pixels of two binary 2D masks. Returns a negative value when either
// boundary is empty.
double assd_reference(const std::vector<int>& pred, const std::vector<int>& gt, int h, int w,
                      double spacing_y, double spacing_x);

// Dice coefficient of two binary masks; 1 when both are empty.
double dsc_reference(const std::vector<int>& pred, const std::vector<int>& gt);

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Vec finite_difference_grad(const std::function<double(const Vec&)>& f, const Vec& x, double eps);

}  // namespace hurmacl::oracle
