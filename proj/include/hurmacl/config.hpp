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
#include <vector>

#include "hurmacl/core_data.hpp"
#include "hurmacl/metrics.hpp"
#include "hurmacl/objective.hpp"

namespace hurmacl {

struct Paths {
  std::string data = "data";         // dataset directory (image + _label pairs)
  std::string val_data;              // evaluation set for sweep-threshold; empty = data
  std::string out = "out";           // output directory
  std::string checkpoint;            // empty = <out>/model.ckpt
  std::string log;                   // empty = <out>/train_log.csv
  std::string input;                 // single image for predict/export-uncertainty; empty = data
};

struct DataOptions {
  int count = 20;
  int size = 64;
  int categories = 5;
  double noise_sigma = 0.05;
  double jitter = 0.02;
  double background = 0.2;
  bool normalize = false;  // window raw HU on load
  double window_lo = -200;
  double window_hi = 400;
};

struct RunOptions {
  std::int64_t max_steps = -1;
  std::string resume;
  int checkpoint_every = 0;  // epochs; 0 = only at the end
  int jobs = 1;
  std::vector<double> thresholds = {0.1, 0.05, 0.01, 0.001, 0.0001};
  SweepMode sweep_mode = SweepMode::kRetrain;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 42;
  Paths paths;
  DataOptions data;
  ModelConfig model;
  TrainConfig train;
  RunOptions run;

  PhantomSpec phantom_spec() const;
  std::string checkpoint_path() const;
  std::string log_path() const;
};

struct ConfigKey {
  std::string name;  // dotted, e.g. "train.alpha"
  std::string type;  // int, float, bool, string, float-list
  std::string doc;
};

// Every accepted key in schema order.
const std::vector<ConfigKey>& config_keys();

// Parses TOML text; unknown keys and type mismatches throw kConfig.
RunConfig parse_config(const std::string& toml_text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);
// Applies one override given as text, e.g. ("train.epochs", "20").
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);
// Full TOML rendering of every key, suitable as a config file.
std::string dump_config(const RunConfig& cfg);

}  // namespace hurmacl
