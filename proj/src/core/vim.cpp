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

#include "hurmacl/vim.hpp"

#include <cmath>

#include "hurmacl/init.hpp"

namespace hurmacl {

void ViMConfig::validate() const {
  if (patch_h < 1 || patch_w < 1) fail(ErrorCode::kConfig, "vim patch size must be >= 1");
  if (embed_dim < 1 || state_dim < 1 || blocks < 0)
    fail(ErrorCode::kConfig, "vim embed_dim/state_dim must be >= 1 and blocks >= 0");
}

void ViMConfig::check_level(int height, int width) const {
  if (height % patch_h != 0 || width % patch_w != 0)
    fail(ErrorCode::kConfig, "vim patch " + std::to_string(patch_h) + "x" +
                                 std::to_string(patch_w) + " does not divide level " +
                                 std::to_string(height) + "x" + std::to_string(width));
}

template <typename T>
void init_ssm_params(ParameterStore<T>& s, const std::string& p, int e, int n,
                     std::uint64_t seed) {
  // Real diagonal init A = -(1..N) and step sizes log-uniform in [1e-3, 1e-1].
  Tensor<T> a_log({e, n});
  for (int i = 0; i < e; ++i)
    for (int j = 0; j < n; ++j) a_log.at(i, j) = static_cast<T>(std::log(j + 1.0));
  s.add(p + ".a_log", std::move(a_log));
  add_constant<T>(s, p + ".d", {e}, 1.0);
  add_uniform<T>(s, p + ".dt.w", {e, e}, 1.0 / std::sqrt(static_cast<double>(e)), seed);
  Tensor<T> dt_b({e});
  Rng rng(derive_seed(seed, p + ".dt.b"));
  for (auto& v : dt_b.vec()) {
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    v = static_cast<T>(dt + std::log(-std::expm1(-dt)));  // inverse softplus
  }
  s.add(p + ".dt.b", std::move(dt_b));
  add_uniform<T>(s, p + ".b.w", {n, e}, 1.0 / std::sqrt(static_cast<double>(e)), seed);
  add_uniform<T>(s, p + ".c.w", {n, e}, 1.0 / std::sqrt(static_cast<double>(e)), seed);
}

template <typename T>
SsmVars bind_ssm(Graph<T>& g, ParameterStore<T>& s, const std::string& p) {
  return {g.param(s, p + ".a_log"), g.param(s, p + ".d"),   g.param(s, p + ".dt.w"),
          g.param(s, p + ".dt.b"),  g.param(s, p + ".b.w"), g.param(s, p + ".c.w")};
}

namespace {

template <typename T>
struct ScanInputs {
  Var delta, b, c;
};

template <typename T>
ScanInputs<T> project(Graph<T>& g, Var x, const SsmVars& p) {
  return {ops::softplus(g, ops::linear(g, x, p.dt_w, p.dt_b)), ops::linear(g, x, p.b_w, Var{}),
          ops::linear(g, x, p.c_w, Var{})};
}

template <typename T>
void add_linear(ParameterStore<T>& s, const std::string& p, int in, int out, std::uint64_t seed) {
  add_uniform<T>(s, p + ".w", {out, in}, 1.0 / std::sqrt(static_cast<double>(in)), seed);
  add_constant<T>(s, p + ".b", {out}, 0.0);
}

template <typename T>
void add_ln(ParameterStore<T>& s, const std::string& p, int e) {
  add_constant<T>(s, p + ".gamma", {e}, 1.0);
  add_constant<T>(s, p + ".beta", {e}, 0.0);
}

template <typename T>
Var ln(Graph<T>& g, Var x, ParameterStore<T>& s, const std::string& p, double eps) {
  return ops::layer_norm(g, x, g.param(s, p + ".gamma"), g.param(s, p + ".beta"),
                         static_cast<T>(eps));
}

template <typename T>
Var lin(Graph<T>& g, Var x, ParameterStore<T>& s, const std::string& p) {
  return ops::linear(g, x, g.param(s, p + ".w"), g.param(s, p + ".b"));
}

}  // namespace

template <typename T>
Var selective_scan(Graph<T>& g, Var x, const SsmVars& p, ops::ScanDirection dir) {
  const auto in = project(g, x, p);
  return ops::selective_scan_core(g, x, in.delta, in.b, in.c, p.a_log, p.d_skip, dir);
}

template <typename T>
void init_vim_params(ParameterStore<T>& s, const std::string& p, const ViMConfig& cfg, int c,
                     int h, int w, std::uint64_t seed) {
  cfg.validate();
  cfg.check_level(h, w);
  const int e = cfg.embed_dim;
  const int d = cfg.patch_h * cfg.patch_w * c;
  const int l = (h / cfg.patch_h) * (w / cfg.patch_w);
  add_linear(s, p + ".embed", d, e, seed);
  add_normal<T>(s, p + ".pos", {l, e}, 0.02, seed);
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string bp = p + ".block" + std::to_string(b);
    add_ln(s, bp + ".ln_in", e);
    add_linear(s, bp + ".in_x", e, e, seed);
    add_linear(s, bp + ".in_z", e, e, seed);
    init_ssm_params(s, bp + ".ssm", e, cfg.state_dim, seed);
    add_ln(s, bp + ".ln_out", e);
  }
  add_ln(s, p + ".final_norm", e);
  add_linear(s, p + ".head", e, d, seed);
}

template <typename T>
Var vim_patchify(Graph<T>& g, Var y_masked, ParameterStore<T>& s, const std::string& p,
                 const ViMConfig& cfg) {
  Var tokens = ops::patchify(g, y_masked, cfg.patch_h, cfg.patch_w);
  return ops::add(g, lin(g, tokens, s, p + ".embed"), g.param(s, p + ".pos"));
}

template <typename T>
Var vim_block(Graph<T>& g, Var seq, ParameterStore<T>& s, const std::string& bp,
              const ViMConfig& cfg) {
  Var u = ln(g, seq, s, bp + ".ln_in", cfg.ln_eps);
  Var x = lin(g, u, s, bp + ".in_x");
  Var z = lin(g, u, s, bp + ".in_z");
  const SsmVars ssm = bind_ssm(g, s, bp + ".ssm");
  const auto in = project(g, x, ssm);
  Var y_fwd = ops::selective_scan_core(g, x, in.delta, in.b, in.c, ssm.a_log, ssm.d_skip,
                                       ops::ScanDirection::kForward);
  Var y_bwd = ops::selective_scan_core(g, x, in.delta, in.b, in.c, ssm.a_log, ssm.d_skip,
                                       ops::ScanDirection::kBackward);
  Var gate = ops::silu(g, z);
  Var fused = ops::add(g, ops::mul(g, gate, y_fwd), ops::mul(g, gate, y_bwd));
  Var out = ln(g, fused, s, bp + ".ln_out", cfg.ln_eps);
  return cfg.residual ? ops::add(g, seq, out) : out;
}

template <typename T>
BranchOutput<T> vim_predict(Graph<T>& g, Var y_masked, const HardMask& mask,
                            const LabelGrid& labels, ParameterStore<T>& s, const std::string& p,
                            const ViMConfig& cfg) {
  const auto& y = g.value(y_masked);
  require(y.rank() == 3, "vim_predict: expects [C,H,W]");
  const int c = y.dim(0), h = y.dim(1), w = y.dim(2);
  cfg.check_level(h, w);
  require(labels.shape.height == h && labels.shape.width == w && mask.height == h &&
              mask.width == w,
          "vim_predict: labels/mask do not match the level resolution");
  Var seq = vim_patchify(g, y_masked, s, p, cfg);
  for (int b = 0; b < cfg.blocks; ++b) seq = vim_block(g, seq, s, p + ".block" + std::to_string(b), cfg);
  seq = ln(g, seq, s, p + ".final_norm", cfg.ln_eps);
  Var logits = ops::unpatchify(g, lin(g, seq, s, p + ".head"), c, h, w, cfg.patch_h, cfg.patch_w);
  BranchOutput<T> out;
  out.probs = ops::softmax_channels(g, logits);
  out.loss = ops::seg_loss(g, out.probs, labels.labels, mask.mask);
  return out;
}

#define HURMACL_VIM(T)                                                                         \
  template void init_ssm_params<T>(ParameterStore<T>&, const std::string&, int, int,          \
                                   std::uint64_t);                                             \
  template SsmVars bind_ssm<T>(Graph<T>&, ParameterStore<T>&, const std::string&);             \
  template Var selective_scan<T>(Graph<T>&, Var, const SsmVars&, ops::ScanDirection);          \
  template void init_vim_params<T>(ParameterStore<T>&, const std::string&, const ViMConfig&,   \
                                   int, int, int, std::uint64_t);                              \
  template Var vim_patchify<T>(Graph<T>&, Var, ParameterStore<T>&, const std::string&,         \
                               const ViMConfig&);                                              \
  template Var vim_block<T>(Graph<T>&, Var, ParameterStore<T>&, const std::string&,            \
                            const ViMConfig&);                                                 \
  template BranchOutput<T> vim_predict<T>(Graph<T>&, Var, const HardMask&, const LabelGrid&,   \
                                          ParameterStore<T>&, const std::string&,              \
                                          const ViMConfig&);

HURMACL_VIM(float)
HURMACL_VIM(double)

}  // namespace hurmacl
