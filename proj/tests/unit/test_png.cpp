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

#include <filesystem>
#include <fstream>

#include "hurmacl/png_io.hpp"
#include "support.hpp"

using namespace hurmacl;

TEST_SUITE("cli") {

TEST_CASE("palette is fixed") {
  const auto& p = category_palette();
  REQUIRE(p.size() == 8);
  CHECK(p[0] == Rgb{0, 0, 0});
  CHECK(p[1] == Rgb{230, 25, 75});
  CHECK(p[2] == Rgb{60, 180, 75});
  CHECK(p[3] == Rgb{255, 225, 25});
  CHECK(p[4] == Rgb{0, 130, 200});
}

TEST_CASE("overlay blends foreground only") {
  IntensityGrid s;
  s.shape = {1, 1, 2};
  s.values = {0.5f, 1.5f};
  LabelGrid l;
  l.shape = s.shape;
  l.labels = {0, 1};
  CHECK(overlay(s, l, 1.0).pixels == std::vector<std::uint8_t>{128, 128, 128, 230, 25, 75});
  const auto img = overlay(s, l, 0.5);
  CHECK(img.pixels[4] == 140);
  CHECK(img.pixels[5] == 165);
  UncertaintyMap u{1, 3, {0.0, 0.5, 1.0}};
  CHECK(heatmap(u) == std::vector<std::uint8_t>{0, 128, 255});
}

TEST_CASE("PNG files carry the signature") {
  const auto path = test::tmp_path("tiny.png");
  write_png_gray({0, 255, 128, 7}, 2, 2, path);
  std::ifstream in(path, std::ios::binary);
  char sig[8];
  in.read(sig, 8);
  CHECK(std::string(sig + 1, 3) == "PNG");
  const auto plot = sweep_plot({{0.1, 50, 0.2}, {0.01, 60, 0.4}, {0.001, 55, 0.6}});
  CHECK(plot.pixels.size() == static_cast<std::size_t>(plot.height) * plot.width * 3);
  write_png_rgb(plot, test::tmp_path("plot.png"));
  CHECK(std::filesystem::file_size(test::tmp_path("plot.png")) > 100);
}

}  // TEST_SUITE
