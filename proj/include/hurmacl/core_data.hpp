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

#include "hurmacl/error.hpp"

namespace hurmacl {

// Slices are volumes with depth 1.
struct GridShape {
  int depth = 1;
  int height = 0;
  int width = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(depth) * height * width;
  }
  std::size_t slice_numel() const { return static_cast<std::size_t>(height) * width; }
  bool operator==(const GridShape&) const = default;
};

std::string to_string(const GridShape& s);

// Physical voxel size in millimetres.
struct Spacing {
  double z = 1.0;
  double y = 1.0;
  double x = 1.0;
};

struct IntensityGrid {
  GridShape shape;
  std::vector<float> values;
  Spacing spacing;

  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * shape.width + x]; }
  IntensityGrid slice(int z) const;
  // Throws on non-finite values, bad spacing, or (when normalized) values outside [0,1].
  void validate(bool normalized) const;
};

struct LabelGrid {
  GridShape shape;
  std::vector<std::int32_t> labels;
  int num_categories = 2;
  Spacing spacing;

  std::int32_t at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * shape.width + x];
  }
  LabelGrid slice(int z) const;
  void validate() const;
  std::size_t count(std::int32_t category) const;
};

struct Sample {
  IntensityGrid image;
  LabelGrid labels;
  std::string id;
};

enum class OrganShape { kEllipse, kTube, kCross, kMirroredPair };

const char* to_string(OrganShape s);

// Geometry is expressed as fractions of the image height/width so one layout
// scales to any image size; stroke thickness of thin organs is in pixels.
struct OrganSpec {
  OrganShape shape = OrganShape::kEllipse;
  int category = 1;
  double contrast = 0.5;
  double center_y = 0.5;
  double center_x = 0.5;
  double radius_y = 0.1;  // ellipse/pair semi-axis; tube arc radius; cross arm half-length
  double radius_x = 0.1;  // ellipse/pair semi-axis; unused otherwise
  double thickness_px = 2.0;  // tube and cross stroke width
  double arc_begin = 0.0;     // tube arc extent, radians
  double arc_end = 0.0;
  double rotation = 0.0;      // cross orientation, radians
};

struct PhantomSpec {
  int height = 64;
  int width = 64;
  int num_categories = 5;
  std::vector<OrganSpec> organs;
  double background = 0.2;
  double noise_sigma = 0.05;
  // Seed-dependent placement jitter as a fraction of the image size.
  double jitter = 0.02;
  Spacing spacing;

  // Background plus ellipse (1), tube (2), cross (3) and, when
  // num_categories >= 5, a mirrored pair (4). num_categories must be 4 or 5.
  static PhantomSpec standard(int size = 64, int num_categories = 5);

  void validate() const;
};

// Deterministic in (spec, seed). Throws kConfig when organs overlap by more
// than 10% of the smaller organ, do not fit, or the cross exceeds 2% of the
// image area.
Sample generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

// Analytic rasterization of one organ after seed jitter; exposed for tests.
std::vector<std::uint8_t> rasterize_organ(const PhantomSpec& spec, const OrganSpec& organ,
                                          int height, int width);
PhantomSpec jittered(const PhantomSpec& spec, std::uint64_t seed);

// clamp((raw - lo) / (hi - lo), 0, 1)
IntensityGrid normalize_intensity(const IntensityGrid& raw, double lo, double hi);

// Nearest-neighbour with the top-left anchor of each block; target must
// divide the source height and width. Applied per slice.
LabelGrid downsample_labels(const LabelGrid& labels, int target_height, int target_width);

}  // namespace hurmacl
