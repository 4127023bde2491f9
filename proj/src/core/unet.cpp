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

#include "hurmacl/unet.hpp"

#include "hurmacl/init.hpp"

namespace hurmacl {

void UNetConfig::validate() const {
  if (depth < 2) fail(ErrorCode::kConfig, "unet depth must be >= 2");
  if (base_channels < 1) fail(ErrorCode::kConfig, "unet base_channels must be >= 1");
  if (num_categories < 2) fail(ErrorCode::kConfig, "num_categories must be >= 2");
  if (kernel != 3) fail(ErrorCode::kConfig, "unet kernel size is fixed at 3");
  if (!(leaky_slope >= 0)) fail(ErrorCode::kConfig, "leaky slope must be >= 0");
}

void UNetConfig::check_input(int height, int width) const {
  if (height % divisor() != 0 || width % divisor() != 0)
    fail(ErrorCode::kInvalidArgument,
         "input " + std::to_string(height) + "x" + std::to_string(width) +
             " is not divisible by 2^(depth-1) = " + std::to_string(divisor()));
}

std::string level_head_prefix(int level, const UNetConfig& cfg) {
  return level == cfg.depth - 2 ? std::string("head") : "level_head." + std::to_string(level);
}

namespace {

std::string enc(int l) { return "enc." + std::to_string(l); }
std::string dec(int l) { return "dec." + std::to_string(l); }

template <typename T>
void add_conv(ParameterStore<T>& s, const std::string& p, int cin, int cout, int k, double slope,
              std::uint64_t seed) {
  add_uniform<T>(s, p + ".w", {cout, cin, k, k}, kaiming_bound(cin * k * k, slope), seed);
  add_constant<T>(s, p + ".b", {cout}, 0.0);
}

template <typename T>
void add_norm(ParameterStore<T>& s, const std::string& p, int ch) {
  add_constant<T>(s, p + ".gamma", {ch}, 1.0);
  add_constant<T>(s, p + ".beta", {ch}, 0.0);
}

template <typename T>
Var conv_block(Graph<T>& g, Var x, ParameterStore<T>& s, const std::string& p,
               const UNetConfig& cfg) {
  const int pad = cfg.kernel / 2;
  for (int i = 1; i <= 2; ++i) {
    const std::string c = p + ".conv" + std::to_string(i);
    const std::string n = p + ".norm" + std::to_string(i);
    x = ops::conv2d(g, x, g.param(s, c + ".w"), g.param(s, c + ".b"), pad);
    x = ops::instance_norm(g, x, g.param(s, n + ".gamma"), g.param(s, n + ".beta"),
                           static_cast<T>(cfg.norm_eps));
    x = ops::leaky_relu(g, x, static_cast<T>(cfg.leaky_slope));
  }
  return x;
}

}  // namespace

template <typename T>
void init_unet_params(ParameterStore<T>& s, const UNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int k = cfg.kernel;
  const double a = cfg.leaky_slope;
  for (int l = 0; l < cfg.depth; ++l) {
    const int cin = l == 0 ? 1 : cfg.channels(l - 1);
    const int ch = cfg.channels(l);
    add_conv(s, enc(l) + ".conv1", cin, ch, k, a, seed);
    add_norm(s, enc(l) + ".norm1", ch);
    add_conv(s, enc(l) + ".conv2", ch, ch, k, a, seed);
    add_norm(s, enc(l) + ".norm2", ch);
  }
  for (int l = cfg.depth - 2; l >= 0; --l) {
    const int ch = cfg.channels(l);
    const int below = cfg.channels(l + 1);
    // Transposed-conv fan-in follows the [Cin, Cout, k, k] convention: Cout*k*k.
    add_uniform<T>(s, dec(l) + ".up.w", {below, ch, 2, 2}, kaiming_bound(ch * 4, a), seed);
    add_constant<T>(s, dec(l) + ".up.b", {ch}, 0.0);
    add_conv(s, dec(l) + ".conv1", 2 * ch, ch, k, a, seed);
    add_norm(s, dec(l) + ".norm1", ch);
    add_conv(s, dec(l) + ".conv2", ch, ch, k, a, seed);
    add_norm(s, dec(l) + ".norm2", ch);
    const std::string head = level_head_prefix(cfg.depth - 2 - l, cfg);
    add_conv(s, head, ch, cfg.num_categories, 1, a, seed);
  }
}

template <typename T>
UNetOutput<T> unet_forward(Graph<T>& g, Var image, ParameterStore<T>& s, const UNetConfig& cfg) {
  const auto& img = g.value(image);
  require(img.rank() == 3 && img.dim(0) == 1, "unet_forward: image must be [1,H,W]");
  cfg.check_input(img.dim(1), img.dim(2));

  std::vector<Var> skips;
  Var x = image;
  for (int l = 0; l < cfg.depth; ++l) {
    if (l > 0) x = ops::max_pool2(g, x);
    x = conv_block(g, x, s, enc(l), cfg);
    skips.push_back(x);
  }
  UNetOutput<T> out;
  for (int l = cfg.depth - 2; l >= 0; --l) {
    x = ops::conv_transpose2x2(g, x, g.param(s, dec(l) + ".up.w"), g.param(s, dec(l) + ".up.b"));
    x = ops::concat_channels(g, x, skips[static_cast<std::size_t>(l)]);
    x = conv_block(g, x, s, dec(l), cfg);
    out.features.push_back(x);
  }
  out.final_logits = ops::conv2d(g, x, g.param(s, "head.w"), g.param(s, "head.b"), 0);
  return out;
}

template <typename T>
Var level_head(Graph<T>& g, Var features, ParameterStore<T>& s, const std::string& weight,
               const std::string& bias) {
  Var logits = ops::conv2d(g, features, g.param(s, weight), g.param(s, bias), 0);
  return ops::softmax_channels(g, logits);
}

template <typename T>
Var level_head(Graph<T>& g, const UNetOutput<T>& out, int level, ParameterStore<T>& s,
               const UNetConfig& cfg) {
  require(level >= 0 && level < static_cast<int>(out.features.size()),
          "level_head: level out of range");
  if (level == cfg.depth - 2) return ops::softmax_channels(g, out.final_logits);
  const std::string p = level_head_prefix(level, cfg);
  return level_head(g, out.features[static_cast<std::size_t>(level)], s, p + ".w", p + ".b");
}

template <typename T>
Tensor<T> image_tensor(const IntensityGrid& image) {
  require(image.shape.depth == 1, "image_tensor expects a single slice");
  Tensor<T> t({1, image.shape.height, image.shape.width});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(image.values[i]);
  return t;
}

template <typename T>
SegLossValue seg_loss_value(const Tensor<T>& probs, const LabelGrid& labels,
                            std::span<const std::uint8_t> include) {
  Graph<T> g;
  Var p = g.input(probs);
  auto r = ops::seg_loss(g, p, labels.labels, include);
  return {static_cast<double>(g.item(r.loss)), r.ce, r.dice, r.empty};
}

#define HURMACL_UNET(T)                                                                       \
  template void init_unet_params<T>(ParameterStore<T>&, const UNetConfig&, std::uint64_t);   \
  template UNetOutput<T> unet_forward<T>(Graph<T>&, Var, ParameterStore<T>&, const UNetConfig&); \
  template Var level_head<T>(Graph<T>&, const UNetOutput<T>&, int, ParameterStore<T>&,        \
                             const UNetConfig&);                                              \
  template Var level_head<T>(Graph<T>&, Var, ParameterStore<T>&, const std::string&,          \
                             const std::string&);                                             \
  template Tensor<T> image_tensor<T>(const IntensityGrid&);                                   \
  template SegLossValue seg_loss_value<T>(const Tensor<T>&, const LabelGrid&,                 \
                                          std::span<const std::uint8_t>);

HURMACL_UNET(float)
HURMACL_UNET(double)

}  // namespace hurmacl
