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

#include <functional>
#include <string>
#include <vector>

#include "hurmacl/config.hpp"

namespace hurmacl {

// Receives human-readable progress lines.
using Reporter = std::function<void(const std::string&)>;

// Image/label pairs of a directory, sorted by case id. Labels are read with
// cfg.data.categories categories; images are windowed when cfg.data.normalize.
std::vector<Sample> load_dataset(const std::string& dir, const RunConfig& cfg);
// 3D volumes become one sample per slice, ids suffixed with _z<k>.
std::vector<Sample> to_slices(const std::vector<Sample>& volumes);

void cmd_generate_data(const RunConfig& cfg, const Reporter& report);
void cmd_train(const RunConfig& cfg, const Reporter& report);
void cmd_evaluate(const RunConfig& cfg, const Reporter& report);
void cmd_predict(const RunConfig& cfg, const Reporter& report);
void cmd_sweep_threshold(const RunConfig& cfg, const Reporter& report);
void cmd_export_uncertainty(const RunConfig& cfg, const Reporter& report);

void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace hurmacl
