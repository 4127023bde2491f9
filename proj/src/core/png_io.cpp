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

#include "hurmacl/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace hurmacl {

const std::vector<Rgb>& category_palette() {
  static const std::vector<Rgb> p = {
      Rgb{0, 0, 0},       Rgb{230, 25, 75},  Rgb{60, 180, 75},  Rgb{255, 225, 25},
      Rgb{0, 130, 200},   Rgb{245, 130, 48}, Rgb{145, 30, 180}, Rgb{70, 240, 240},
  };
  return p;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png(const std::string& path, int height, int width, int color_type, int channels,
               const std::uint8_t* data) {
  require(height > 0 && width > 0, "png: empty image");
  const std::string tmp = path + ".tmp";
  FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) fail(ErrorCode::kIo, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    fail(ErrorCode::kInternal, "png: cannot allocate writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    std::remove(tmp.c_str());
    fail(ErrorCode::kIo, "png: write failed for " + path);
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(f) != 0) fail(ErrorCode::kIo, "png: close failed for " + path);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot rename into " + path + ": " + ec.message());
}

}  // namespace

RgbImage overlay(const IntensityGrid& slice, const LabelGrid& labels, double alpha) {
  require(slice.shape.depth == 1 && labels.shape == slice.shape, "overlay: expects matching 2D grids");
  RgbImage img{slice.shape.height, slice.shape.width, {}};
  img.pixels.resize(slice.values.size() * 3);
  const auto& pal = category_palette();
  for (std::size_t p = 0; p < slice.values.size(); ++p) {
    const double grey = std::clamp(static_cast<double>(slice.values[p]), 0.0, 1.0);
    const int c = labels.labels[p];
    for (int k = 0; k < 3; ++k) {
      double v = grey;
      if (c > 0) v = (1 - alpha) * grey + alpha * pal[static_cast<std::size_t>(c) % pal.size()][k] / 255.0;
      img.pixels[p * 3 + k] = to_byte(v);
    }
  }
  return img;
}

std::vector<std::uint8_t> heatmap(const UncertaintyMap& u) {
  std::vector<std::uint8_t> out(u.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(u.values[i]);
  return out;
}

namespace {

void put(RgbImage& img, int y, int x, Rgb c) {
  if (y < 0 || y >= img.height || x < 0 || x >= img.width) return;
  const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
  img.pixels[i] = c[0];
  img.pixels[i + 1] = c[1];
  img.pixels[i + 2] = c[2];
}

void line(RgbImage& img, int y0, int x0, int y1, int x1, Rgb c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put(img, y0, x0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

RgbImage sweep_plot(const std::vector<SweepRow>& rows, int height, int width) {
  require(height >= 64 && width >= 64, "sweep_plot: image too small");
  RgbImage img{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width * 3, 255)};
  const Rgb axis{0, 0, 0}, grid{220, 220, 220}, series{0, 90, 180};
  const int left = 32, right = width - 12, top = 12, bottom = height - 28;

  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.threshold > 0) pts.emplace_back(std::log10(r.threshold), r.mean_dsc);
  std::sort(pts.begin(), pts.end());
  double x_lo = -4, x_hi = -1, y_lo = 0, y_hi = 100;
  if (!pts.empty()) {
    x_lo = std::floor(pts.front().first);
    x_hi = std::ceil(pts.back().first);
    if (x_hi <= x_lo) x_hi = x_lo + 1;
  }
  auto px = [&](double v) { return left + static_cast<int>(std::lround((v - x_lo) / (x_hi - x_lo) * (right - left))); };
  auto py = [&](double v) { return bottom - static_cast<int>(std::lround((v - y_lo) / (y_hi - y_lo) * (bottom - top))); };

  for (int d = 0; d <= 10; ++d) line(img, py(d * 10.0), left, py(d * 10.0), right, grid);
  for (double d = x_lo; d <= x_hi + 1e-9; d += 1) {
    line(img, top, px(d), bottom, px(d), grid);
    line(img, bottom, px(d), bottom + 4, px(d), axis);
  }
  line(img, bottom, left, bottom, right, axis);
  line(img, top, left, bottom, left, axis);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int x = px(pts[i].first), y = py(pts[i].second);
    if (i > 0) line(img, py(pts[i - 1].second), px(pts[i - 1].first), y, x, series);
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) put(img, y + a, x + b, series);
  }
  return img;
}

void write_png_rgb(const RgbImage& img, const std::string& path) {
  require(img.pixels.size() == static_cast<std::size_t>(img.height) * img.width * 3, "png: bad RGB buffer");
  write_png(path, img.height, img.width, PNG_COLOR_TYPE_RGB, 3, img.pixels.data());
}

void write_png_gray(const std::vector<std::uint8_t>& pixels, int height, int width,
                    const std::string& path) {
  require(pixels.size() == static_cast<std::size_t>(height) * width, "png: bad grey buffer");
  write_png(path, height, width, PNG_COLOR_TYPE_GRAY, 1, pixels.data());
}

}  // namespace hurmacl
