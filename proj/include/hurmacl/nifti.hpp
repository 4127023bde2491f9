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

#include <filesystem>
#include <optional>

#include "hurmacl/core_data.hpp"

namespace hurmacl {

// NIfTI-1 single-file datatype codes accepted on input.
enum class NiftiType : short {
  kUint8 = 2,
  kInt16 = 4,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUint16 = 512,
};

struct Volume {
  IntensityGrid image;
  std::optional<LabelGrid> labels;
};

// Reads a .nii or .nii.gz file. A companion <stem>_label.nii(.gz) next to it
// is loaded into `labels` when present. Malformed headers throw kParse naming
// the offending field; other datatypes throw kUnsupported.
Volume load_volume(const std::filesystem::path& path);

IntensityGrid read_intensity(const std::filesystem::path& path);
// num_categories <= 0 infers max(label) + 1 (at least 2).
LabelGrid read_labels(const std::filesystem::path& path, int num_categories = 0);

// float32 for intensities; uint8 labels when C <= 255, else int16. 2D slices
// are written as depth-1 volumes. Writes through a temp file + rename.
void save_volume(const IntensityGrid& grid, const std::filesystem::path& path);
void save_volume(const LabelGrid& grid, const std::filesystem::path& path);

std::filesystem::path label_companion(const std::filesystem::path& image_path);

}  // namespace hurmacl
