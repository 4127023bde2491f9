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

#include "hurmacl/objective.hpp"

#include <cmath>

namespace hurmacl {

void ModelConfig::validate(int height, int width) const {
  unet.validate();
  vim.validate();
  dcnn.validate();
  unet.check_input(height, width);
  for (int i = 0; i < num_levels(); ++i) vim.check_level(level_height(i, height), level_width(i, width));
}

void TrainConfig::validate() const {
  auto cfg = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kConfig, what);
  };
  cfg(alpha >= 0 && std::isfinite(alpha), "train.alpha must be >= 0");
  cfg(beta >= 0 && std::isfinite(beta), "train.beta must be >= 0");
  cfg(threshold >= 0, "train.threshold must be >= 0");
  cfg(lr > 0, "train.lr must be > 0");
  cfg(momentum >= 0 && momentum < 1, "train.momentum must lie in [0, 1)");
  cfg(epochs >= 1, "train.epochs must be >= 1");
  cfg(batch_size >= 1, "train.batch_size must be >= 1");
}

std::vector<int> TrainConfig::active_levels(const ModelConfig& model) const {
  std::vector<int> out;
  if (levels == LevelSelection::kFinest) {
    out.push_back(model.num_levels() - 1);
  } else {
    for (int i = 0; i < model.num_levels(); ++i) out.push_back(i);
  }
  return out;
}

std::string branch_prefix(const char* branch, int level) {
  return std::string(branch) + ".l" + std::to_string(level);
}

template <typename T>
void init_model(ParameterStore<T>& s, const ModelConfig& cfg, int height, int width,
                std::uint64_t seed) {
  cfg.validate(height, width);
  init_unet_params(s, cfg.unet, seed);
  for (int i = 0; i < cfg.num_levels(); ++i) {
    init_vim_params(s, branch_prefix("vim", i), cfg.vim, cfg.unet.num_categories,
                    cfg.level_height(i, height), cfg.level_width(i, width), seed);
    init_dcnn_params(s, branch_prefix("dcnn", i), cfg.dcnn, cfg.unet.num_categories, seed);
  }
}

namespace {

template <typename T>
Var zero(Graph<T>& g) {
  return g.input(Tensor<T>::scalar(T(0)));
}

template <typename T>
Var image_input(Graph<T>& g, const Sample& sample) {
  return g.input(image_tensor<T>(sample.image));
}

}  // namespace

template <typename T>
Objective<T> build_objective(Graph<T>& g, ParameterStore<T>& s, const ModelConfig& model,
                             const TrainConfig& train, const Sample& sample) {
  Objective<T> obj;
  obj.backbone = unet_forward(g, image_input(g, sample), s, model.unet);
  obj.final_probs = ops::softmax_channels(g, obj.backbone.final_logits);
  obj.loss1 = ops::seg_loss(g, obj.final_probs, sample.labels.labels, {}).loss;

  const int height = sample.image.shape.height, width = sample.image.shape.width;
  const int finest = model.num_levels() - 1;
  if (train.level_loss1) {
    for (int i = 0; i < finest; ++i) {
      Var y = level_head(g, obj.backbone, i, s, model.unet);
      const LabelGrid lab = downsample_labels(sample.labels, model.level_height(i, height),
                                              model.level_width(i, width));
      obj.loss1 = ops::add(g, obj.loss1, ops::seg_loss(g, y, lab.labels, {}).loss);
    }
  }

  obj.loss2 = zero(g);
  obj.loss3 = zero(g);
  for (int i : train.active_levels(model)) {
    LevelTerms<T> t;
    t.level = i;
    Var y = i == finest ? obj.final_probs : level_head(g, obj.backbone, i, s, model.unet);
    // The mask is computed from values only and enters the graph as a constant.
    const HardMask hard = binarize(uncertainty_map(g.value(y)), train.threshold);
    t.hard = hard.count();
    if (t.hard == 0) {
      obj.levels.push_back(t);
      continue;
    }
    t.empty = false;
    const LabelGrid lab =
        downsample_labels(sample.labels, model.level_height(i, height), model.level_width(i, width));
    Var y_masked = ops::apply_mask(g, y, hard.mask);
    auto vim = vim_predict(g, y_masked, hard, lab, s, branch_prefix("vim", i), model.vim);
    auto dcnn = dcnn_predict(g, y_masked, hard, lab, s, branch_prefix("dcnn", i), model.dcnn);
    t.vim_loss = vim.loss.loss;
    t.dcnn_loss = dcnn.loss.loss;
    const DirectionMatrix dir = direction_matrix(pixel_ce(g.value(vim.probs), lab),
                                                 pixel_ce(g.value(dcnn.probs), lab), hard);
    t.count_m = dir.count_m;
    auto hfd = hfd_losses(g, vim.probs, dcnn.probs, dir, hard);
    t.vim_student = hfd.vim_student;
    t.dcnn_student = hfd.dcnn_student;
    obj.loss2 = ops::add(g, obj.loss2, ops::add(g, t.vim_loss, t.dcnn_loss));
    obj.loss3 = ops::add(g, obj.loss3, hfd.total);
    obj.levels.push_back(t);
  }
  obj.total = ops::add(g, obj.loss1,
                       ops::add(g, ops::scale(g, obj.loss2, static_cast<T>(train.alpha)),
                                ops::scale(g, obj.loss3, static_cast<T>(train.beta))));
  return obj;
}

template <typename T>
Var build_plain_objective(Graph<T>& g, ParameterStore<T>& s, const ModelConfig& model,
                          const Sample& sample) {
  auto out = unet_forward(g, image_input(g, sample), s, model.unet);
  Var probs = ops::softmax_channels(g, out.final_logits);
  return ops::seg_loss(g, probs, sample.labels.labels, {}).loss;
}

#define HURMACL_OBJECTIVE(T)                                                                  \
  template void init_model<T>(ParameterStore<T>&, const ModelConfig&, int, int, std::uint64_t); \
  template Objective<T> build_objective<T>(Graph<T>&, ParameterStore<T>&, const ModelConfig&, \
                                           const TrainConfig&, const Sample&);                \
  template Var build_plain_objective<T>(Graph<T>&, ParameterStore<T>&, const ModelConfig&,    \
                                        const Sample&);

HURMACL_OBJECTIVE(float)
HURMACL_OBJECTIVE(double)

}  // namespace hurmacl
