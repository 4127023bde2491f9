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

#include "hurmacl/core_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hurmacl/rng.hpp"

namespace hurmacl {

std::string to_string(const GridShape& s) {
  std::ostringstream os;
  os << s.depth << "x" << s.height << "x" << s.width;
  return os.str();
}

const char* to_string(OrganShape s) {
  switch (s) {
    case OrganShape::kEllipse: return "ellipse";
    case OrganShape::kTube: return "tube";
    case OrganShape::kCross: return "cross";
    case OrganShape::kMirroredPair: return "mirrored_pair";
  }
  return "unknown";
}

IntensityGrid IntensityGrid::slice(int z) const {
  require(z >= 0 && z < shape.depth, "slice index out of range");
  IntensityGrid out;
  out.shape = {1, shape.height, shape.width};
  out.spacing = spacing;
  const auto n = shape.slice_numel();
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(z * n),
                    values.begin() + static_cast<std::ptrdiff_t>((z + 1) * n));
  return out;
}

void IntensityGrid::validate(bool normalized) const {
  require(shape.depth >= 1 && shape.height >= 1 && shape.width >= 1,
          "intensity grid has an empty axis");
  require(values.size() == shape.numel(), "intensity grid size does not match shape");
  require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0, "spacing must be positive");
  for (float v : values) {
    require(std::isfinite(v), "intensity grid contains a non-finite value");
    if (normalized) require(v >= 0.0f && v <= 1.0f, "normalized intensity outside [0,1]");
  }
}

LabelGrid LabelGrid::slice(int z) const {
  require(z >= 0 && z < shape.depth, "slice index out of range");
  LabelGrid out;
  out.shape = {1, shape.height, shape.width};
  out.num_categories = num_categories;
  out.spacing = spacing;
  const auto n = shape.slice_numel();
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(z * n),
                    labels.begin() + static_cast<std::ptrdiff_t>((z + 1) * n));
  return out;
}

void LabelGrid::validate() const {
  require(num_categories >= 2, "label grid needs at least 2 categories");
  require(labels.size() == shape.numel(), "label grid size does not match shape");
  for (auto l : labels)
    require(l >= 0 && l < num_categories, "label outside [0, C-1]: " + std::to_string(l));
}

std::size_t LabelGrid::count(std::int32_t category) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), category));
}

PhantomSpec PhantomSpec::standard(int size, int num_categories) {
  require(num_categories == 4 || num_categories == 5,
          "standard phantom supports 4 or 5 categories");
  PhantomSpec spec;
  spec.height = size;
  spec.width = size;
  spec.num_categories = num_categories;

  OrganSpec large;
  large.shape = OrganShape::kEllipse;
  large.category = 1;
  large.contrast = 0.75;
  large.center_y = 0.60;
  large.center_x = 0.50;
  large.radius_y = 0.19;
  large.radius_x = 0.25;
  spec.organs.push_back(large);

  OrganSpec tube;
  tube.shape = OrganShape::kTube;
  tube.category = 2;
  tube.contrast = 0.55;
  tube.center_y = 0.60;
  tube.center_x = 0.50;
  tube.radius_y = 0.33;
  tube.thickness_px = 2.0;
  tube.arc_begin = 1.20 * std::numbers::pi;
  tube.arc_end = 1.80 * std::numbers::pi;
  spec.organs.push_back(tube);

  OrganSpec cross;
  cross.shape = OrganShape::kCross;
  cross.category = 3;
  cross.contrast = 0.32;
  cross.center_y = 0.13;
  cross.center_x = 0.50;
  cross.radius_y = 0.06;
  cross.thickness_px = 1.5;
  cross.rotation = std::numbers::pi / 4.0;
  spec.organs.push_back(cross);

  if (num_categories == 5) {
    OrganSpec pair;
    pair.shape = OrganShape::kMirroredPair;
    pair.category = 4;
    pair.contrast = 0.45;
    pair.center_y = 0.86;
    pair.center_x = 0.16;
    pair.radius_y = 0.07;
    pair.radius_x = 0.08;
    spec.organs.push_back(pair);
  }
  return spec;
}

void PhantomSpec::validate() const {
  auto cfg = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "phantom spec: " + what);
  };
  cfg(height >= 8 && width >= 8, "image must be at least 8x8");
  cfg(num_categories >= 2, "num_categories must be >= 2");
  cfg(noise_sigma >= 0 && std::isfinite(noise_sigma), "noise_sigma must be >= 0");
  cfg(background >= 0 && background <= 1, "background must lie in [0,1]");
  cfg(jitter >= 0 && jitter < 0.2, "jitter must lie in [0, 0.2)");
  cfg(!organs.empty(), "at least one organ is required");
  for (const auto& o : organs) {
    cfg(o.category >= 1 && o.category < num_categories,
        std::string(to_string(o.shape)) + " category outside [1, C-1]");
    cfg(o.contrast >= 0 && o.contrast <= 1, "contrast must lie in [0,1]");
    cfg(o.contrast != background, "organ contrast equals background");
    cfg(o.radius_y > 0, "organ radius must be positive");
    if (o.shape == OrganShape::kEllipse || o.shape == OrganShape::kMirroredPair)
      cfg(o.radius_x > 0, "organ radius must be positive");
    if (o.shape == OrganShape::kTube || o.shape == OrganShape::kCross)
      cfg(o.thickness_px > 0, "stroke thickness must be positive");
  }
}

namespace {

double segment_distance(double py, double px, double ay, double ax, double by, double bx) {
  const double vy = by - ay, vx = bx - ax;
  const double len2 = vy * vy + vx * vx;
  double t = len2 > 0 ? ((py - ay) * vy + (px - ax) * vx) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dy = py - (ay + t * vy), dx = px - (ax + t * vx);
  return std::sqrt(dy * dy + dx * dx);
}

bool in_ellipse(double py, double px, double cy, double cx, double ry, double rx) {
  const double u = (py - cy) / ry, v = (px - cx) / rx;
  return u * u + v * v <= 1.0;
}

// Pixel-unit bounding box half-extent check for the fit invariant.
struct Box {
  double y0, y1, x0, x1;
};

Box organ_box(const OrganSpec& o, int h, int w) {
  const double cy = o.center_y * h, cx = o.center_x * w;
  switch (o.shape) {
    case OrganShape::kEllipse:
      return {cy - o.radius_y * h, cy + o.radius_y * h, cx - o.radius_x * w, cx + o.radius_x * w};
    case OrganShape::kMirroredPair: {
      const double mx = (1.0 - o.center_x) * w - 1.0;
      return {cy - o.radius_y * h, cy + o.radius_y * h,
              std::min(cx, mx) - o.radius_x * w, std::max(cx, mx) + o.radius_x * w};
    }
    case OrganShape::kTube: {
      // Bound the drawn arc only; the rest of the circle is never rasterized.
      const double r = o.radius_y * std::min(h, w), pad = o.thickness_px;
      Box b{cy, cy, cx, cx};
      bool first = true;
      for (int i = 0; i <= 360; ++i) {
        const double a = o.arc_begin + (o.arc_end - o.arc_begin) * i / 360.0;
        const double y = cy + r * std::sin(a), x = cx + r * std::cos(a);
        if (first) b = {y, y, x, x};
        first = false;
        b = {std::min(b.y0, y), std::max(b.y1, y), std::min(b.x0, x), std::max(b.x1, x)};
      }
      return {b.y0 - pad, b.y1 + pad, b.x0 - pad, b.x1 + pad};
    }
    case OrganShape::kCross: {
      const double r = o.radius_y * std::min(h, w) + o.thickness_px;
      return {cy - r, cy + r, cx - r, cx + r};
    }
  }
  return {0, 0, 0, 0};
}

}  // namespace

std::vector<std::uint8_t> rasterize_organ(const PhantomSpec& spec, const OrganSpec& o,
                                          int h, int w) {
  (void)spec;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w, 0);
  const double cy = o.center_y * h, cx = o.center_x * w;
  const double scale = std::min(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double py = y, px = x;
      bool inside = false;
      switch (o.shape) {
        case OrganShape::kEllipse:
          inside = in_ellipse(py, px, cy, cx, o.radius_y * h, o.radius_x * w);
          break;
        case OrganShape::kMirroredPair:
          inside = in_ellipse(py, px, cy, cx, o.radius_y * h, o.radius_x * w) ||
                   in_ellipse(py, px, cy, (1.0 - o.center_x) * w - 1.0, o.radius_y * h,
                              o.radius_x * w);
          break;
        case OrganShape::kTube: {
          const double dy = py - cy, dx = px - cx;
          const double r = std::sqrt(dy * dy + dx * dx);
          double ang = std::atan2(dy, dx);
          if (ang < 0) ang += 2.0 * std::numbers::pi;
          inside = std::abs(r - o.radius_y * scale) <= o.thickness_px / 2.0 &&
                   ang >= o.arc_begin && ang <= o.arc_end;
          break;
        }
        case OrganShape::kCross: {
          const double arm = o.radius_y * scale;
          bool hit = false;
          for (int k = 0; k < 2 && !hit; ++k) {
            const double a = o.rotation + k * std::numbers::pi / 2.0;
            const double uy = std::sin(a) * arm, ux = std::cos(a) * arm;
            hit = segment_distance(py, px, cy - uy, cx - ux, cy + uy, cx + ux) <=
                  o.thickness_px / 2.0;
          }
          inside = hit;
          break;
        }
      }
      mask[static_cast<std::size_t>(y) * w + x] = inside ? 1 : 0;
    }
  }
  return mask;
}

PhantomSpec jittered(const PhantomSpec& spec, std::uint64_t seed) {
  PhantomSpec out = spec;
  Rng rng(derive_seed(seed, "phantom.geometry"));
  for (auto& o : out.organs) {
    // Both centre coordinates are drawn for every organ so the stream
    // position does not depend on the organ mix.
    const double jy = rng.uniform(-1.0, 1.0) * spec.jitter;
    const double jx = rng.uniform(-1.0, 1.0) * spec.jitter;
    const double jr = rng.uniform(-1.0, 1.0);
    o.center_y += jy;
    if (o.shape != OrganShape::kMirroredPair) o.center_x += jx;
    if (o.shape == OrganShape::kCross) o.rotation += 0.3 * jr;
    if (o.shape == OrganShape::kTube) {
      o.arc_begin += 0.1 * jr;
      o.arc_end += 0.1 * jr;
    }
  }
  return out;
}

Sample generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  const PhantomSpec geo = jittered(spec, seed);
  const int h = spec.height, w = spec.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::size_t> areas;
  for (const auto& o : geo.organs) {
    const Box b = organ_box(o, h, w);
    if (b.y0 < 0 || b.x0 < 0 || b.y1 > h - 1 || b.x1 > w - 1)
      fail(ErrorCode::kConfig,
           std::string("phantom spec: ") + to_string(o.shape) + " does not fit inside the image");
    masks.push_back(rasterize_organ(geo, o, h, w));
    const auto area = static_cast<std::size_t>(std::count(masks.back().begin(), masks.back().end(), 1));
    if (area == 0)
      fail(ErrorCode::kConfig,
           std::string("phantom spec: ") + to_string(o.shape) + " rasterizes to zero pixels");
    areas.push_back(area);
    if (o.shape == OrganShape::kCross && static_cast<double>(area) >= 0.02 * static_cast<double>(n))
      fail(ErrorCode::kConfig, "phantom spec: cross organ covers >= 2% of the image");
  }
  for (std::size_t a = 0; a < masks.size(); ++a) {
    for (std::size_t b = a + 1; b < masks.size(); ++b) {
      std::size_t overlap = 0;
      for (std::size_t i = 0; i < n; ++i) overlap += masks[a][i] & masks[b][i];
      if (static_cast<double>(overlap) > 0.1 * static_cast<double>(std::min(areas[a], areas[b])))
        fail(ErrorCode::kConfig, std::string("phantom spec: ") + to_string(geo.organs[a].shape) +
                                     " and " + to_string(geo.organs[b].shape) +
                                     " overlap by more than 10% of the smaller organ");
    }
  }

  Sample s;
  s.id = "phantom_" + std::to_string(seed);
  s.labels.shape = {1, h, w};
  s.labels.num_categories = spec.num_categories;
  s.labels.spacing = spec.spacing;
  s.labels.labels.assign(n, 0);
  // Later organs are painted over earlier ones where they touch.
  for (std::size_t k = 0; k < masks.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (masks[k][i]) s.labels.labels[i] = geo.organs[k].category;

  std::vector<double> contrast(static_cast<std::size_t>(spec.num_categories), spec.background);
  for (const auto& o : geo.organs) contrast[static_cast<std::size_t>(o.category)] = o.contrast;

  s.image.shape = {1, h, w};
  s.image.spacing = spec.spacing;
  s.image.values.resize(n);
  Rng noise(derive_seed(seed, "phantom.noise"));
  for (std::size_t i = 0; i < n; ++i) {
    double v = contrast[static_cast<std::size_t>(s.labels.labels[i])];
    if (spec.noise_sigma > 0) v += spec.noise_sigma * noise.normal();
    s.image.values[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return s;
}

IntensityGrid normalize_intensity(const IntensityGrid& raw, double lo, double hi) {
  if (!(lo < hi))
    fail(ErrorCode::kConfig, "intensity window requires lo < hi");
  IntensityGrid out = raw;
  const double span = hi - lo;
  for (auto& v : out.values)
    v = static_cast<float>(std::clamp((static_cast<double>(v) - lo) / span, 0.0, 1.0));
  return out;
}

LabelGrid downsample_labels(const LabelGrid& labels, int target_height, int target_width) {
  const int h = labels.shape.height, w = labels.shape.width;
  require(target_height > 0 && target_width > 0, "downsample target must be positive");
  require(h % target_height == 0 && w % target_width == 0,
          "downsample target " + std::to_string(target_height) + "x" +
              std::to_string(target_width) + " does not divide " + std::to_string(h) + "x" +
              std::to_string(w));
  const int fy = h / target_height, fx = w / target_width;
  LabelGrid out;
  out.shape = {labels.shape.depth, target_height, target_width};
  out.num_categories = labels.num_categories;
  out.spacing = {labels.spacing.z, labels.spacing.y * fy, labels.spacing.x * fx};
  out.labels.resize(out.shape.numel());
  for (int z = 0; z < labels.shape.depth; ++z)
    for (int y = 0; y < target_height; ++y)
      for (int x = 0; x < target_width; ++x)
        out.labels[(static_cast<std::size_t>(z) * target_height + y) * target_width + x] =
            labels.labels[(static_cast<std::size_t>(z) * h + y * fy) * w + x * fx];
  return out;
}

}  // namespace hurmacl
