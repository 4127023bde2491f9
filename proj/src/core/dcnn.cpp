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

#include "hurmacl/dcnn.hpp"

#include "hurmacl/init.hpp"

namespace hurmacl {

void DcnnConfig::validate() const {
  if (layers < 1) fail(ErrorCode::kConfig, "dcnn layers must be >= 1");
  if (width < 1) fail(ErrorCode::kConfig, "dcnn width must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) fail(ErrorCode::kConfig, "dcnn kernel must be odd");
}

template <typename T>
void init_deform_layer(ParameterStore<T>& s, const std::string& p, int cin, int cout, int k,
                       double slope, std::uint64_t seed) {
  add_constant<T>(s, p + ".offset.w", {2 * k * k, cin, k, k}, 0.0);
  add_constant<T>(s, p + ".offset.b", {2 * k * k}, 0.0);
  add_uniform<T>(s, p + ".w", {cout, cin, k, k}, kaiming_bound(cin * k * k, slope), seed);
  add_constant<T>(s, p + ".b", {cout}, 0.0);
}

template <typename T>
Var deform_conv(Graph<T>& g, Var input, ParameterStore<T>& s, const std::string& p) {
  const auto& w = s.value(p + ".w");
  const int k = w.dim(2);
  Var offsets = ops::conv2d(g, input, g.param(s, p + ".offset.w"), g.param(s, p + ".offset.b"), k / 2);
  return ops::deform_conv2d(g, input, offsets, g.param(s, p + ".w"), g.param(s, p + ".b"));
}

template <typename T>
void init_dcnn_params(ParameterStore<T>& s, const std::string& p, const DcnnConfig& cfg, int c,
                      std::uint64_t seed) {
  cfg.validate();
  for (int i = 0; i < cfg.layers; ++i)
    init_deform_layer(s, p + ".layer" + std::to_string(i), i == 0 ? c : cfg.width, cfg.width,
                      cfg.kernel, cfg.leaky_slope, seed);
  add_uniform<T>(s, p + ".head.w", {c, cfg.width, 1, 1}, kaiming_bound(cfg.width, cfg.leaky_slope),
                 seed);
  add_constant<T>(s, p + ".head.b", {c}, 0.0);
}

template <typename T>
BranchOutput<T> dcnn_predict(Graph<T>& g, Var y_masked, const HardMask& mask,
                             const LabelGrid& labels, ParameterStore<T>& s, const std::string& p,
                             const DcnnConfig& cfg) {
  const auto& y = g.value(y_masked);
  require(y.rank() == 3 && labels.shape.height == y.dim(1) && labels.shape.width == y.dim(2) &&
              mask.height == y.dim(1) && mask.width == y.dim(2),
          "dcnn_predict: labels/mask do not match the level resolution");
  Var x = y_masked;
  for (int i = 0; i < cfg.layers; ++i) {
    x = deform_conv(g, x, s, p + ".layer" + std::to_string(i));
    x = ops::leaky_relu(g, x, static_cast<T>(cfg.leaky_slope));
  }
  Var logits = ops::conv2d(g, x, g.param(s, p + ".head.w"), g.param(s, p + ".head.b"), 0);
  BranchOutput<T> out;
  out.probs = ops::softmax_channels(g, logits);
  out.loss = ops::seg_loss(g, out.probs, labels.labels, mask.mask);
  return out;
}

#define HURMACL_DCNN(T)                                                                        \
  template void init_deform_layer<T>(ParameterStore<T>&, const std::string&, int, int, int,    \
                                     double, std::uint64_t);                                   \
  template Var deform_conv<T>(Graph<T>&, Var, ParameterStore<T>&, const std::string&);         \
  template void init_dcnn_params<T>(ParameterStore<T>&, const std::string&, const DcnnConfig&, \
                                    int, std::uint64_t);                                       \
  template BranchOutput<T> dcnn_predict<T>(Graph<T>&, Var, const HardMask&, const LabelGrid&,  \
                                           ParameterStore<T>&, const std::string&,             \
                                           const DcnnConfig&);

HURMACL_DCNN(float)
HURMACL_DCNN(double)

}  // namespace hurmacl
