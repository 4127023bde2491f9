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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hurmacl/objective.hpp"

namespace hurmacl {

// v <- mu * v + g ; p <- p - lr * (g + mu * v)
template <typename T>
class SgdNesterov {
 public:
  explicit SgdNesterov(double momentum = 0.99) : momentum_(momentum) {}

  void step(ParameterStore<T>& params, double lr);
  // Single-tensor update, exposed for tests.
  static void update(Tensor<T>& p, const Tensor<T>& g, Tensor<T>& v, T lr, T mu);

  std::map<std::string, Tensor<T>>& state() { return velocity_; }
  const std::map<std::string, Tensor<T>>& state() const { return velocity_; }
  double momentum() const { return momentum_; }

 private:
  double momentum_;
  std::map<std::string, Tensor<T>> velocity_;
};

// lr0 * (1 - epoch / total)^0.9, clamped at 0 past the end.
double lr_schedule(int epoch, int total_epochs, double lr0);

// Batch means of one optimizer step; counts are summed over samples and levels.
struct StepLog {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0;
  double loss1 = 0;
  double loss2_vim = 0;
  double loss2_dcnn = 0;
  double l_pm = 0;
  double l_pd = 0;
  double total = 0;
  std::int64_t hard = 0;
  std::int64_t count_m = 0;
};

std::string step_log_header();
std::string step_log_row(const StepLog& s);

enum class TrainMode { kFull, kPlain };

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  TrainMode mode = TrainMode::kFull;
  int height = 0;
  int width = 0;
  std::int64_t step = 0;  // optimizer steps taken
  int epoch = 0;          // completed epochs
  ParameterStore<float> params;
  std::map<std::string, Tensor<float>> momentum;
  std::vector<StepLog> history;
};

// Fresh model for the given image size; kPlain holds backbone parameters only.
Checkpoint init_checkpoint(const ModelConfig& model, const TrainConfig& train, TrainMode mode,
                           int height, int width);

struct TrainOptions {
  std::int64_t max_steps = -1;  // stop once ckpt.step reaches this; -1 = run to the last epoch
  std::function<void(const StepLog&)> on_step;
};

int steps_per_epoch(std::size_t dataset_size, int batch_size);

// Continues from ckpt.step until the configured epoch count (or max_steps).
// Sample order of epoch e is a seeded permutation, so resuming a saved
// checkpoint is bit-identical to an uninterrupted run. Throws kDiverged on a
// non-finite total loss.
void train(Checkpoint& ckpt, const std::vector<Sample>& dataset, const TrainOptions& opts = {});

// Convenience wrappers.
Checkpoint train_model(const ModelConfig& model, const TrainConfig& train,
                       const std::vector<Sample>& dataset, const TrainOptions& opts = {});
Checkpoint train_plain_unet(const ModelConfig& model, const TrainConfig& train,
                            const std::vector<Sample>& dataset, const TrainOptions& opts = {});

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hurmacl
