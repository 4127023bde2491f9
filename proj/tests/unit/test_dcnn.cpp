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

#include "hurmacl/dcnn.hpp"
#include "hurmacl/ops.hpp"
#include "support.hpp"

using namespace hurmacl;
using test::random_tensor;

namespace {

std::vector<double> deform(const Tensor<double>& x, const Tensor<double>& off, const Tensor<double>& w,
                           const Tensor<double>& b) {
  Graph<double> g;
  return g.value(ops::deform_conv2d(g, g.input(x), g.input(off), g.input(w), g.input(b))).vec();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("dcnn_branch") {

TEST_CASE("zero offsets reduce to the plain convolution") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int cin = 1 + static_cast<int>(rng.below(3)), cout = 1 + static_cast<int>(rng.below(3));
    const int h = 2 + static_cast<int>(rng.below(6)), w = 2 + static_cast<int>(rng.below(6));
    const int k = rng.below(2) ? 3 : 5;
    const auto x = random_tensor(rng, {cin, h, w});
    const auto wt = random_tensor(rng, {cout, cin, k, k});
    const auto b = random_tensor(rng, {cout});
    const Tensor<double> off({2 * k * k, h, w});
    const auto ref = oracle::conv2d_reference(x.vec(), cin, h, w, wt.vec(), cout, k, b.vec());
    CHECK(max_abs_diff(deform(x, off, wt, b), ref) < 1e-5);
  }
}

TEST_CASE("constant input away from borders ignores offsets inside the grid") {
  // Any sample point whose four corners lie inside the grid reads the constant.
  Rng rng(42);
  const int h = 9, w = 9, k = 3;
  const Tensor<double> x({1, h, w}, 0.7);
  const auto wt = random_tensor(rng, {2, 1, k, k});
  const auto b = random_tensor(rng, {2});
  const auto off = random_tensor(rng, {2 * k * k, h, w}, -0.9, 0.9);
  const auto out = deform(x, off, wt, b);
  for (int o = 0; o < 2; ++o) {
    double expect = b[o];
    for (int t = 0; t < k * k; ++t) expect += 0.7 * wt[static_cast<std::size_t>(o) * k * k + t];
    for (int y = 2; y < h - 2; ++y)
      for (int xx = 2; xx < w - 2; ++xx)
        CHECK(std::abs(out[(static_cast<std::size_t>(o) * h + y) * w + xx] - expect) < 1e-12);
  }
}

TEST_CASE("random offsets match the bilinear oracle") {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int cin = 1 + static_cast<int>(rng.below(2)), cout = 1 + static_cast<int>(rng.below(2));
    const int h = 5, w = 5, k = 3;
    const auto x = random_tensor(rng, {cin, h, w});
    const auto wt = random_tensor(rng, {cout, cin, k, k});
    const auto b = random_tensor(rng, {cout});
    const auto off = random_tensor(rng, {2 * k * k, h, w}, -2.5, 2.5);
    const auto ref =
        oracle::deform_conv_reference(x.vec(), cin, h, w, off.vec(), wt.vec(), cout, k, b.vec());
    CHECK(max_abs_diff(deform(x, off, wt, b), ref) < 1e-6);
  }
}

TEST_CASE("deformable convolution gradients away from lattice kinks") {
  Rng rng(44);
  const int cin = 2, cout = 2, h = 4, w = 4, k = 3;
  const auto x = random_tensor(rng, {cin, h, w});
  const auto wt = random_tensor(rng, {cout, cin, k, k});
  const auto b = random_tensor(rng, {cout});
  // Fractional parts kept inside [0.2, 0.8] so no sample crosses an integer.
  Tensor<double> off({2 * k * k, h, w});
  for (std::size_t i = 0; i < off.size(); ++i)
    off[i] = static_cast<double>(static_cast<int>(rng.below(3)) - 1) + rng.uniform(0.2, 0.8);
  const auto rep = test::grad_check(
      [](Graph<double>& g, const std::vector<Var>& v) {
        return test::sum_weighted(g, ops::deform_conv2d(g, v[0], v[1], v[2], v[3]), 3);
      },
      {x, off, wt, b}, 1e-5);
  CHECK(rep.checked > 0);
  CHECK(rep.worst < 1e-3);
}

TEST_CASE("offset predictor starts at zero and the branch emits a ProbGrid") {
  DcnnConfig cfg;
  cfg.layers = 2;
  cfg.width = 3;
  ParameterStore<double> s;
  init_dcnn_params(s, "dcnn", cfg, 3, 9);
  for (const auto& name : s.names())
    if (name.find(".offset") != std::string::npos)
      for (double v : s.value(name).vec()) CHECK(v == 0.0);
  Rng rng(45);
  const auto y = test::random_probs(rng, 3, 4, 4);
  HardMask mask = HardMask::all(4, 4, 1);
  mask.mask[5] = 0;
  const auto masked = mask_probs(y, mask).probs;
  const LabelGrid lab = test::random_labels(rng, 3, 4, 4);
  Graph<double> g;
  const auto out = dcnn_predict(g, g.input(masked), mask, lab, s, "dcnn", cfg);
  const auto& p = g.value(out.probs);
  for (int px = 0; px < 16; ++px) {
    double sum = 0;
    for (int c = 0; c < 3; ++c) sum += p[static_cast<std::size_t>(c) * 16 + px];
    CHECK(std::abs(sum - 1) < 1e-9);
  }
  // Nudge the offsets off zero so their gradients are exercised as well.
  for (auto& [name, e] : s)
    if (name.find(".offset") != std::string::npos)
      for (auto& v : e.value.vec()) v = rng.uniform(-0.01, 0.01);
  const auto rep = test::param_grad_check(s, [&](Graph<double>& gg) {
    return dcnn_predict(gg, gg.input(masked), mask, lab, s, "dcnn", cfg).loss.loss;
  });
  CHECK(rep.worst < 1e-3);
  CHECK(branch_loss(0.25, 0.5) == 0.75);
}

}  // TEST_SUITE
