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

#include "hurmacl/autograd.hpp"
#include "hurmacl/core_data.hpp"
#include "hurmacl/hurm.hpp"
#include "hurmacl/ops.hpp"

namespace hurmacl {

struct ViMConfig {
  int patch_h = 4;
  int patch_w = 4;
  int embed_dim = 64;
  int state_dim = 16;
  int blocks = 2;
  bool residual = true;  // pre-norm residual around each block
  double ln_eps = 1e-5;

  void validate() const;
  void check_level(int height, int width) const;
};

// Parameters of one selective-scan layer, bound into a graph.
struct SsmVars {
  Var a_log;  // [E, N]
  Var d_skip; // [E]
  Var dt_w;   // [E, E]
  Var dt_b;   // [E]
  Var b_w;    // [N, E]
  Var c_w;    // [N, E]
};

// Adds "<prefix>.a_log", ".d", ".dt.w", ".dt.b", ".b.w", ".c.w".
template <typename T>
void init_ssm_params(ParameterStore<T>& store, const std::string& prefix, int embed_dim,
                     int state_dim, std::uint64_t seed);
template <typename T>
SsmVars bind_ssm(Graph<T>& g, ParameterStore<T>& store, const std::string& prefix);

// delta = softplus(x W_dt^T + b_dt), B = x W_B^T, C = x W_C^T, then the
// recurrence of ops::selective_scan_core.
template <typename T>
Var selective_scan(Graph<T>& g, Var x, const SsmVars& p, ops::ScanDirection dir);

// Parameters for one branch instance at a level of size height x width.
template <typename T>
void init_vim_params(ParameterStore<T>& store, const std::string& prefix, const ViMConfig& cfg,
                     int num_categories, int height, int width, std::uint64_t seed);

// token_t = W_embed * flatten(patch_t) + b + pos_t
template <typename T>
Var vim_patchify(Graph<T>& g, Var y_masked, ParameterStore<T>& store, const std::string& prefix,
                 const ViMConfig& cfg);

// u = LN(S); x, z = linear(u); S' = LN(SiLU(z)*y_fwd + SiLU(z)*y_bwd) (+ S).
template <typename T>
Var vim_block(Graph<T>& g, Var s, ParameterStore<T>& store, const std::string& block_prefix,
              const ViMConfig& cfg);

template <typename T>
struct BranchOutput {
  Var probs;  // [C, H, W]
  ops::SegLoss<T> loss;
};

template <typename T>
BranchOutput<T> vim_predict(Graph<T>& g, Var y_masked, const HardMask& mask,
                            const LabelGrid& labels, ParameterStore<T>& store,
                            const std::string& prefix, const ViMConfig& cfg);

}  // namespace hurmacl
