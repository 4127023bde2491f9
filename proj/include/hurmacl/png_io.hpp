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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hurmacl/core_data.hpp"
#include "hurmacl/hurm.hpp"
#include "hurmacl/metrics.hpp"

namespace hurmacl {

using Rgb = std::array<std::uint8_t, 3>;

// Fixed category colours; category c uses entry c % size.
const std::vector<Rgb>& category_palette();

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB
};

// Grey image with foreground categories alpha-blended in palette colours.
RgbImage overlay(const IntensityGrid& slice, const LabelGrid& labels, double alpha = 0.5);
// 8-bit grey, round(255 * U).
std::vector<std::uint8_t> heatmap(const UncertaintyMap& u);
// DSC against log10(T), one marker per row joined by line segments.
RgbImage sweep_plot(const std::vector<SweepRow>& rows, int height = 240, int width = 360);

void write_png_rgb(const RgbImage& img, const std::string& path);
void write_png_gray(const std::vector<std::uint8_t>& pixels, int height, int width,
                    const std::string& path);

}  // namespace hurmacl
