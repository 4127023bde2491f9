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

#include "hurmacl/dcnn.hpp"
#include "hurmacl/hfd.hpp"
#include "hurmacl/unet.hpp"
#include "hurmacl/vim.hpp"

namespace hurmacl {

enum class LevelSelection { kAll, kFinest };

struct ModelConfig {
  UNetConfig unet;
  ViMConfig vim;
  DcnnConfig dcnn;

  void validate(int height, int width) const;
  // Resolution of decoder level i (0 = coarsest) for an input of the given size.
  int level_height(int level, int height) const { return height >> (unet.depth - 2 - level); }
  int level_width(int level, int width) const { return width >> (unet.depth - 2 - level); }
  int num_levels() const { return unet.depth - 1; }
};

struct TrainConfig {
  double alpha = 0.5;
  double beta = 0.1;
  double threshold = 0.001;
  double lr = 0.001;
  double momentum = 0.99;
  int epochs = 300;
  int batch_size = 4;
  LevelSelection levels = LevelSelection::kAll;
  bool level_loss1 = false;  // add loss_1 terms at the coarser decoder levels
  std::uint64_t seed = 42;

  void validate() const;
  std::vector<int> active_levels(const ModelConfig& model) const;
};

std::string branch_prefix(const char* branch, int level);

// Backbone first, then one ViM and one DCNN branch per decoder level.
template <typename T>
void init_model(ParameterStore<T>& store, const ModelConfig& cfg, int height, int width,
                std::uint64_t seed);

template <typename T>
struct LevelTerms {
  int level = 0;
  bool empty = true;  // no hard pixel: branch and distillation terms are 0
  Var vim_loss, dcnn_loss, vim_student, dcnn_student;
  std::size_t hard = 0;
  std::size_t count_m = 0;
};

template <typename T>
struct Objective {
  UNetOutput<T> backbone;
  Var final_probs;
  Var loss1;
  Var loss2;
  Var loss3;
  Var total;  // loss1 + alpha * loss2 + beta * loss3
  std::vector<LevelTerms<T>> levels;
};

// Full per-sample objective: backbone, HURM on each active level, both
// branches on the masked map, HFD, and the weighted total.
template <typename T>
Objective<T> build_objective(Graph<T>& g, ParameterStore<T>& store, const ModelConfig& model,
                             const TrainConfig& train, const Sample& sample);

// Backbone-only objective (loss_1), the plain U-Net trainer's graph.
template <typename T>
Var build_plain_objective(Graph<T>& g, ParameterStore<T>& store, const ModelConfig& model,
                          const Sample& sample);

// loss_1 + alpha * loss_2 + beta * loss_3
inline double total_loss(double loss1, double loss2, double loss3, double alpha, double beta) {
  return loss1 + alpha * loss2 + beta * loss3;
}

}  // namespace hurmacl
