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

#include "hurmacl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "hurmacl/rng.hpp"

namespace hurmacl {

template <typename T>
void SgdNesterov<T>::update(Tensor<T>& p, const Tensor<T>& g, Tensor<T>& v, T lr, T mu) {
  require(p.shape() == g.shape() && p.shape() == v.shape(), "sgd: shape mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = mu * v[i] + g[i];
    p[i] -= lr * (g[i] + mu * v[i]);
  }
}

template <typename T>
void SgdNesterov<T>::step(ParameterStore<T>& params, double lr) {
  for (auto& [name, e] : params) {
    auto it = velocity_.find(name);
    if (it == velocity_.end()) it = velocity_.emplace(name, Tensor<T>(e.value.shape())).first;
    update(e.value, e.grad, it->second, static_cast<T>(lr), static_cast<T>(momentum_));
  }
}

template class SgdNesterov<float>;
template class SgdNesterov<double>;

double lr_schedule(int epoch, int total_epochs, double lr0) {
  require(total_epochs > 0, "lr_schedule: total_epochs must be positive");
  if (epoch >= total_epochs) return 0.0;
  return lr0 * std::pow(1.0 - static_cast<double>(epoch) / total_epochs, 0.9);
}

std::string step_log_header() { return "step,loss_1,loss_2_1,loss_2_2,L_P_M,L_P_D,total,hard,M"; }

std::string step_log_row(const StepLog& s) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%lld,%lld",
                static_cast<long long>(s.step), s.loss1, s.loss2_vim, s.loss2_dcnn, s.l_pm, s.l_pd,
                s.total, static_cast<long long>(s.hard), static_cast<long long>(s.count_m));
  return buf;
}

Checkpoint init_checkpoint(const ModelConfig& model, const TrainConfig& train, TrainMode mode,
                           int height, int width) {
  train.validate();
  model.validate(height, width);
  Checkpoint c;
  c.model = model;
  c.train = train;
  c.mode = mode;
  c.height = height;
  c.width = width;
  if (mode == TrainMode::kPlain) {
    init_unet_params(c.params, model.unet, train.seed);
  } else {
    init_model(c.params, model, height, width, train.seed);
  }
  return c;
}

int steps_per_epoch(std::size_t dataset_size, int batch_size) {
  return static_cast<int>((dataset_size + static_cast<std::size_t>(batch_size) - 1) /
                          static_cast<std::size_t>(batch_size));
}

namespace {

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "epoch" + std::to_string(epoch)));
  rng.shuffle(order.begin(), order.end());
  return order;
}

void check_sample(const Checkpoint& c, const Sample& s) {
  if (s.image.shape.depth != 1 || s.image.shape.height != c.height || s.image.shape.width != c.width)
    fail(ErrorCode::kInvalidArgument, "train: sample " + s.id + " has shape " +
                                          to_string(s.image.shape) + ", model expects 1x" +
                                          std::to_string(c.height) + "x" + std::to_string(c.width));
  if (s.labels.num_categories != c.model.unet.num_categories)
    fail(ErrorCode::kInvalidArgument, "train: sample " + s.id + " has " +
                                          std::to_string(s.labels.num_categories) +
                                          " categories, model expects " +
                                          std::to_string(c.model.unet.num_categories));
}

// Forward + backward of one sample; gradients land in the store.
StepLog sample_step(Checkpoint& c, const Sample& s) {
  StepLog log;
  Graph<float> g;
  if (c.mode == TrainMode::kPlain) {
    Var loss = build_plain_objective(g, c.params, c.model, s);
    log.loss1 = log.total = g.item(loss);
    if (std::isfinite(log.total)) g.backward(loss);
  } else {
    auto obj = build_objective(g, c.params, c.model, c.train, s);
    log.loss1 = g.item(obj.loss1);
    log.total = g.item(obj.total);
    for (const auto& t : obj.levels) {
      log.hard += static_cast<std::int64_t>(t.hard);
      log.count_m += static_cast<std::int64_t>(t.count_m);
      if (t.empty) continue;
      log.loss2_vim += g.item(t.vim_loss);
      log.loss2_dcnn += g.item(t.dcnn_loss);
      log.l_pm += g.item(t.vim_student);
      log.l_pd += g.item(t.dcnn_student);
    }
    if (std::isfinite(log.total)) g.backward(obj.total);
  }
  g.accumulate_param_grads();
  return log;
}

}  // namespace

void train(Checkpoint& c, const std::vector<Sample>& data, const TrainOptions& opts) {
  if (data.empty()) fail(ErrorCode::kInvalidArgument, "train: dataset is empty");
  c.train.validate();
  for (const auto& s : data) check_sample(c, s);

  SgdNesterov<float> opt(c.train.momentum);
  opt.state() = std::move(c.momentum);
  const int spe = steps_per_epoch(data.size(), c.train.batch_size);
  const std::int64_t last = static_cast<std::int64_t>(spe) * c.train.epochs;

  std::vector<std::size_t> order;
  int order_epoch = -1;
  while (c.step < last && (opts.max_steps < 0 || c.step < opts.max_steps)) {
    const int epoch = static_cast<int>(c.step / spe);
    const int batch = static_cast<int>(c.step % spe);
    if (epoch != order_epoch) {
      order = epoch_order(c.train.seed, epoch, data.size());
      order_epoch = epoch;
    }
    const std::size_t begin = static_cast<std::size_t>(batch) * c.train.batch_size;
    const std::size_t end = std::min(data.size(), begin + c.train.batch_size);
    const double n = static_cast<double>(end - begin);

    c.params.zero_grad();
    StepLog log;
    log.step = c.step + 1;
    log.epoch = epoch;
    log.lr = lr_schedule(epoch, c.train.epochs, c.train.lr);
    for (std::size_t k = begin; k < end; ++k) {
      const StepLog s = sample_step(c, data[order[k]]);
      if (!std::isfinite(s.total)) {
        c.momentum = std::move(opt.state());
        fail(ErrorCode::kDiverged,
             "training diverged at step " + std::to_string(log.step) + " (epoch " +
                 std::to_string(epoch) + ", sample " + data[order[k]].id +
                 "): non-finite total loss, loss_1=" + std::to_string(s.loss1));
      }
      log.loss1 += s.loss1 / n;
      log.loss2_vim += s.loss2_vim / n;
      log.loss2_dcnn += s.loss2_dcnn / n;
      log.l_pm += s.l_pm / n;
      log.l_pd += s.l_pd / n;
      log.total += s.total / n;
      log.hard += s.hard;
      log.count_m += s.count_m;
    }
    const float inv = 1.0f / static_cast<float>(end - begin);
    for (auto& [_, e] : c.params)
      for (std::size_t i = 0; i < e.grad.size(); ++i) e.grad[i] *= inv;
    opt.step(c.params, log.lr);

    ++c.step;
    c.epoch = static_cast<int>(c.step / spe);
    c.history.push_back(log);
    if (opts.on_step) opts.on_step(log);
  }
  c.params.zero_grad();
  c.momentum = std::move(opt.state());
}

Checkpoint train_model(const ModelConfig& model, const TrainConfig& tc,
                       const std::vector<Sample>& data, const TrainOptions& opts) {
  require(!data.empty(), "train: dataset is empty");
  Checkpoint c = init_checkpoint(model, tc, TrainMode::kFull, data[0].image.shape.height,
                                 data[0].image.shape.width);
  train(c, data, opts);
  return c;
}

Checkpoint train_plain_unet(const ModelConfig& model, const TrainConfig& tc,
                            const std::vector<Sample>& data, const TrainOptions& opts) {
  require(!data.empty(), "train: dataset is empty");
  Checkpoint c = init_checkpoint(model, tc, TrainMode::kPlain, data[0].image.shape.height,
                                 data[0].image.shape.width);
  train(c, data, opts);
  return c;
}

}  // namespace hurmacl
