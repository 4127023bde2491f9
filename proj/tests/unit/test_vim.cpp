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

#include "hurmacl/ops.hpp"
#include "hurmacl/vim.hpp"
#include "support.hpp"

using namespace hurmacl;

namespace {

struct ScanCase {
  oracle::ScanParams p;
  Tensor<double> x, delta, b, c, a_log, d;
};

ScanCase random_scan(Rng& rng, int l, int e, int n) {
  ScanCase s;
  s.p.length = l;
  s.p.channels = e;
  s.p.state = n;
  s.x = test::random_tensor(rng, {l, e});
  s.delta = test::random_tensor(rng, {l, e}, 0.01, 1.0);
  s.b = test::random_tensor(rng, {l, n});
  s.c = test::random_tensor(rng, {l, n});
  s.a_log = test::random_tensor(rng, {e, n}, -1.0, 1.5);
  s.d = test::random_tensor(rng, {e});
  s.p.delta = s.delta.vec();
  s.p.b = s.b.vec();
  s.p.c = s.c.vec();
  s.p.a_log = s.a_log.vec();
  s.p.d = s.d.vec();
  return s;
}

Var scan(Graph<double>& g, const std::vector<Var>& v, ops::ScanDirection dir) {
  return ops::selective_scan_core(g, v[0], v[1], v[2], v[3], v[4], v[5], dir);
}


}  // namespace

TEST_SUITE("vim_branch") {

TEST_CASE("selective scan matches the per-step oracle in both directions") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int l = 1 + static_cast<int>(rng.below(6)), e = 1 + static_cast<int>(rng.below(2)),
              n = 1 + static_cast<int>(rng.below(2));
    const ScanCase s = random_scan(rng, l, e, n);
    for (auto dir : {ops::ScanDirection::kForward, ops::ScanDirection::kBackward}) {
      Graph<double> g;
      const Var y = ops::selective_scan_core(g, g.input(s.x), g.input(s.delta), g.input(s.b),
                                             g.input(s.c), g.input(s.a_log), g.input(s.d), dir);
      const auto ref = oracle::scan_reference(s.x.vec(), s.p, dir == ops::ScanDirection::kBackward);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(g.value(y)[i] - ref[i]) < 1e-10);
    }
  }
}

TEST_CASE("L=1 scan is identical in both directions; B=0 leaves only the skip") {
  Rng rng(32);
  ScanCase s = random_scan(rng, 1, 2, 2);
  Graph<double> g;
  std::vector<Var> v;
  for (const auto* t : {&s.x, &s.delta, &s.b, &s.c, &s.a_log, &s.d}) v.push_back(g.input(*t));
  CHECK(g.value(scan(g, v, ops::ScanDirection::kForward)).vec() ==
        g.value(scan(g, v, ops::ScanDirection::kBackward)).vec());

  ScanCase z = random_scan(rng, 5, 2, 2);
  z.b.fill(0.0);
  Graph<double> h;
  const Var y = ops::selective_scan_core(h, h.input(z.x), h.input(z.delta), h.input(z.b), h.input(z.c),
                                         h.input(z.a_log), h.input(z.d), ops::ScanDirection::kForward);
  for (int t = 0; t < 5; ++t)
    for (int k = 0; k < 2; ++k) CHECK(h.value(y).at(t, k) == z.d[k] * z.x.at(t, k));
}

TEST_CASE("scan gradients agree with finite differences") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const ScanCase s = random_scan(rng, 2 + static_cast<int>(rng.below(5)), 2, 2);
    for (auto dir : {ops::ScanDirection::kForward, ops::ScanDirection::kBackward}) {
      const auto rep = test::grad_check(
          [&](Graph<double>& g, const std::vector<Var>& v) { return test::sum_weighted(g, scan(g, v, dir), 5); },
          {s.x, s.delta, s.b, s.c, s.a_log, s.d});
      CHECK(rep.worst < 1e-3);
    }
  }
}

TEST_CASE("ViM branch output is a ProbGrid and its parameter gradients check out") {
  ViMConfig cfg;
  cfg.patch_h = cfg.patch_w = 2;
  cfg.embed_dim = 4;
  cfg.state_dim = 2;
  cfg.blocks = 1;
  ParameterStore<double> s;
  init_vim_params(s, "vim", cfg, 3, 4, 4, 7);
  Rng rng(34);
  const auto y = test::random_probs(rng, 3, 4, 4);
  HardMask mask{4, 4, std::vector<std::uint8_t>(16, 1), 0.001};
  for (int p = 0; p < 16; p += 3) mask.mask[p] = 0;
  const auto masked = mask_probs(y, mask).probs;
  const LabelGrid lab = test::random_labels(rng, 3, 4, 4);
  auto build = [&](Graph<double>& g) {
    return vim_predict(g, g.input(masked), mask, lab, s, "vim", cfg).loss.loss;
  };
  {
    Graph<double> g;
    auto out = vim_predict(g, g.input(masked), mask, lab, s, "vim", cfg);
    for (int p = 0; p < 16; ++p) {
      double sum = 0;
      for (int c = 0; c < 3; ++c) sum += g.value(out.probs)[static_cast<std::size_t>(c) * 16 + p];
      CHECK(std::abs(sum - 1) < 1e-6);
    }
  }
  CHECK(test::param_grad_check(s, build).worst < 1e-3);
  const auto rep = test::grad_check(
      [&](Graph<double>& g, const std::vector<Var>& v) {
        return vim_predict(g, v[0], mask, lab, s, "vim", cfg).loss.loss;
      },
      {masked});
  CHECK(rep.worst < 1e-3);
}

TEST_CASE("patch grid must divide the level") {
  ViMConfig cfg;
  CHECK_THROWS_AS(cfg.check_level(6, 8), Error);
  CHECK_NOTHROW(cfg.check_level(8, 8));
}

}  // TEST_SUITE
