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

#include "hurmacl/hfd.hpp"

#include <algorithm>
#include <cmath>

#include "hurmacl/ops.hpp"

namespace hurmacl {

template <typename T>
std::vector<double> pixel_ce(const Tensor<T>& probs, const LabelGrid& labels) {
  require(probs.rank() == 3 && labels.shape.height == probs.dim(1) &&
              labels.shape.width == probs.dim(2) && labels.shape.depth == 1,
          "pixel_ce: labels do not match probabilities");
  const std::size_t hw = labels.labels.size();
  std::vector<double> ce(hw);
  for (std::size_t p = 0; p < hw; ++p) {
    const int l = labels.labels[p];
    require(l >= 0 && l < probs.dim(0), "pixel_ce: label outside [0, C-1]");
    ce[p] = -std::log(std::max(static_cast<double>(probs[l * hw + p]), ops::kProbFloor));
  }
  return ce;
}

DirectionMatrix direction_matrix(std::span<const double> ce_vim, std::span<const double> ce_dcnn,
                                 const HardMask& hard) {
  require(ce_vim.size() == hard.mask.size() && ce_dcnn.size() == hard.mask.size(),
          "direction_matrix: size mismatch");
  DirectionMatrix d;
  d.height = hard.height;
  d.width = hard.width;
  d.m.assign(hard.mask.size(), 0);
  for (std::size_t p = 0; p < hard.mask.size(); ++p) {
    if (!hard.mask[p]) {
      ++d.count_g;
      continue;
    }
    if (ce_vim[p] < ce_dcnn[p]) {
      d.m[p] = 1;
      ++d.count_m;
    }
  }
  return d;
}

template <typename T>
std::vector<double> kl_map(const Tensor<T>& p, const Tensor<T>& q) {
  require(p.shape() == q.shape() && p.rank() == 3, "kl_map: shape mismatch");
  const std::size_t hw = static_cast<std::size_t>(p.dim(1)) * p.dim(2);
  std::vector<double> kl(hw, 0.0);
  for (std::size_t px = 0; px < hw; ++px)
    for (int k = 0; k < p.dim(0); ++k) {
      const double a = p[k * hw + px], b = q[k * hw + px];
      kl[px] += a * (std::log(std::max(a, ops::kProbFloor)) - std::log(std::max(b, ops::kProbFloor)));
    }
  return kl;
}

template <typename T>
HfdLosses<T> hfd_losses(Graph<T>& g, Var vim_probs, Var dcnn_probs, const DirectionMatrix& dir,
                        const HardMask& hard) {
  const std::size_t hw = dir.m.size();
  require(hard.mask.size() == hw, "hfd_losses: mask size mismatch");
  std::vector<std::uint8_t> vim_sel(hw), dcnn_sel(hw);
  for (std::size_t p = 0; p < hw; ++p) {
    vim_sel[p] = hard.mask[p] && !dir.m[p];
    dcnn_sel[p] = dir.m[p];
  }
  const double vim_norm = static_cast<double>(hw - dir.count_m - dir.count_g);
  const double dcnn_norm = static_cast<double>(dir.count_m);
  HfdLosses<T> out;
  out.vim_student = ops::masked_kl(g, vim_probs, dcnn_probs, vim_sel, vim_norm, ops::Student::kFirst);
  out.dcnn_student =
      ops::masked_kl(g, vim_probs, dcnn_probs, dcnn_sel, dcnn_norm, ops::Student::kSecond);
  out.total = ops::add(g, out.vim_student, out.dcnn_student);
  return out;
}

template <typename T>
HfdValues hfd_values(const Tensor<T>& vim_probs, const Tensor<T>& dcnn_probs,
                     const LabelGrid& labels, const HardMask& hard) {
  HfdValues v;
  v.direction = direction_matrix(pixel_ce(vim_probs, labels), pixel_ce(dcnn_probs, labels), hard);
  Graph<T> g;
  auto l = hfd_losses(g, g.input(vim_probs), g.input(dcnn_probs), v.direction, hard);
  v.vim_student = static_cast<double>(g.item(l.vim_student));
  v.dcnn_student = static_cast<double>(g.item(l.dcnn_student));
  v.total = static_cast<double>(g.item(l.total));
  return v;
}

#define HURMACL_HFD(T)                                                                     \
  template std::vector<double> pixel_ce<T>(const Tensor<T>&, const LabelGrid&);           \
  template std::vector<double> kl_map<T>(const Tensor<T>&, const Tensor<T>&);             \
  template HfdLosses<T> hfd_losses<T>(Graph<T>&, Var, Var, const DirectionMatrix&,        \
                                      const HardMask&);                                    \
  template HfdValues hfd_values<T>(const Tensor<T>&, const Tensor<T>&, const LabelGrid&,  \
                                   const HardMask&);

HURMACL_HFD(float)
HURMACL_HFD(double)

}  // namespace hurmacl
