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

#include <cmath>

#include "support.hpp"

using namespace hurmacl;

TEST_SUITE("oracles") {

TEST_CASE("finite differences") {
  const auto ones = oracle::finite_difference_grad(
      [](const oracle::Vec& x) {
        double s = 0;
        for (double v : x) s += v;
        return s;
      },
      {0.3, -1.0, 2.0}, 1e-4);
  for (double g : ones) CHECK(g == doctest::Approx(1.0).epsilon(1e-10));
  const auto sq = oracle::finite_difference_grad([](const oracle::Vec& x) { return x[0] * x[0]; }, {3.0}, 1e-4);
  CHECK(sq[0] == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("entropy reference endpoints") {
  const auto u = oracle::entropy_reference({0.5, 1.0, 0.5, 0.0}, 2, 2);
  CHECK(u[0] == doctest::Approx(1.0));
  CHECK(u[1] == 0.0);
}

TEST_CASE("scan reference by hand") {
  // L=2, E=1, N=1: A = -1, dt = 1 -> h1 = x1 * b1, h2 = e^-1 h1 + x2 b2.
  oracle::ScanParams p;
  p.length = 2;
  p.channels = 1;
  p.state = 1;
  p.delta = {1, 1};
  p.b = {2, 3};
  p.c = {1, 1};
  p.a_log = {0};
  p.d = {0.5};
  const auto y = oracle::scan_reference({1, 1}, p, false);
  CHECK(y[0] == doctest::Approx(2.5));
  CHECK(y[1] == doctest::Approx(std::exp(-1.0) * 2 + 3 + 0.5));
  const auto r = oracle::scan_reference({1, 1}, p, true);
  CHECK(r[1] == doctest::Approx(3.5));
  CHECK(r[0] == doctest::Approx(std::exp(-1.0) * 3 + 2 + 0.5));
}

TEST_CASE("deformable reference with integer offsets is a shifted convolution") {
  // 1x1 kernel, offset (0, 1): output reads the right neighbour.
  const auto y = oracle::deform_conv_reference({1, 2, 3}, 1, 1, 3, {0, 0, 0, 1, 1, 1}, {1.0}, 1, 1, {0.0});
  CHECK(y == oracle::Vec{2, 3, 0});
}

}  // TEST_SUITE
