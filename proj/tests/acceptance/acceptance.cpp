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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criterion 9 drives the CLI executable given by --cli.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hurmacl/dcnn.hpp"
#include "hurmacl/hfd.hpp"
#include "hurmacl/hurm.hpp"
#include "hurmacl/metrics.hpp"
#include "hurmacl/ops.hpp"
#include "hurmacl/rng.hpp"
#include "hurmacl/trainer.hpp"
#include "hurmacl/vim.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hurmacl;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, const char* f = "%.3g") {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

Tensor<double> random_tensor(Rng& rng, Shape shape, double lo = -1, double hi = 1) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.vec()) v = rng.uniform(lo, hi);
  return t;
}

Tensor<double> random_probs(Rng& rng, int c, int h, int w, double sharp = 1.0) {
  Tensor<double> t({c, h, w});
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < hw; ++p) {
    double s = 0;
    for (int k = 0; k < c; ++k) s += t[k * hw + p] = std::exp(sharp * rng.normal());
    for (int k = 0; k < c; ++k) t[k * hw + p] /= s;
  }
  return t;
}

// sum(x * W) for a fixed random W: a scalar that depends on every element.
Var project(Graph<double>& g, Var x, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> w(g.value(x).shape());
  for (auto& v : w.vec()) v = rng.uniform(-1, 1);
  const Var m = ops::mul(g, x, g.input(w));
  const int n = static_cast<int>(w.size());
  const Var flat = g.make(g.value(m).reshaped({1, n}), true, [m](Graph<double>& gg, const Tensor<double>& og) {
    if (double* gm = gg.grad_buffer(m))
      for (std::size_t i = 0; i < og.size(); ++i) gm[i] += og[i];
  });
  return ops::linear(g, flat, g.input(Tensor<double>({1, n}, 1.0)), Var{});
}

using Builder = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

// Worst relative error of reverse-mode gradients against central differences.
double grad_error(const Builder& build, const std::vector<Tensor<double>>& inputs, double eps,
                  const std::function<bool(std::size_t, std::size_t)>& skip = {}) {
  Graph<double> g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.input(t, true));
  g.backward(build(g, vars));
  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto numeric = oracle::finite_difference_grad(
        [&](const oracle::Vec& x) {
          Graph<double> h;
          std::vector<Var> vs;
          for (std::size_t j = 0; j < inputs.size(); ++j)
            vs.push_back(h.input(j == i ? Tensor<double>(inputs[j].shape(), x) : inputs[j]));
          return h.item(build(h, vs));
        },
        inputs[i].vec(), eps);
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      if (skip && skip(i, k)) continue;
      const double a = g.has_grad(vars[i]) ? g.grad(vars[i])[k] : 0.0, n = numeric[k];
      worst = std::max(worst, std::abs(a - n) / (std::max(std::abs(a), std::abs(n)) + 1e-8));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------

Outcome entropy_check() {
  Outcome o;
  Rng rng(101);
  double worst = 0;
  int pixels = 0;
  while (pixels < 1000) {
    const int c = 2 + static_cast<int>(rng.below(7));
    const auto p = random_probs(rng, c, 10, 10, rng.uniform(0.1, 4));
    const auto u = uncertainty_map(p);
    const auto r = oracle::entropy_reference(p.vec(), c, 100);
    for (int i = 0; i < 100; ++i) worst = std::max(worst, std::abs(u.values[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)]));
    pixels += 100;
  }
  bool exact = true;
  for (int c = 2; c <= 12; ++c) {
    const auto uni = uncertainty_map(Tensor<double>({c, 1, 1}, 1.0 / c));
    Tensor<double> hot({c, 1, 1});
    hot[static_cast<std::size_t>(c - 1)] = 1.0;
    exact = exact && uni.values[0] == 1.0 && uncertainty_map(hot).values[0] == 0.0;
  }
  o.pass = worst <= 1e-10 && exact;
  o.detail = "max |U - ref| " + num(worst) + " over " + std::to_string(pixels) + " pixels; uniform/one-hot exact: " +
             (exact ? "yes" : "no");
  return o;
}

Outcome scan_check() {
  Outcome o;
  Rng rng(102);
  double worst = 0, grad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int l = 1 + static_cast<int>(rng.below(8)), e = 1 + static_cast<int>(rng.below(3)),
              n = 1 + static_cast<int>(rng.below(3));
    const std::vector<Tensor<double>> in{random_tensor(rng, {l, e}), random_tensor(rng, {l, e}, 0.01, 1.0),
                                         random_tensor(rng, {l, n}), random_tensor(rng, {l, n}),
                                         random_tensor(rng, {e, n}, -1, 1.5), random_tensor(rng, {e})};
    oracle::ScanParams p{l, e, n, in[1].vec(), in[2].vec(), in[3].vec(), in[4].vec(), in[5].vec()};
    for (auto dir : {ops::ScanDirection::kForward, ops::ScanDirection::kBackward}) {
      Graph<double> g;
      const Var y = ops::selective_scan_core(g, g.input(in[0]), g.input(in[1]), g.input(in[2]), g.input(in[3]),
                                             g.input(in[4]), g.input(in[5]), dir);
      const auto r = oracle::scan_reference(in[0].vec(), p, dir == ops::ScanDirection::kBackward);
      for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(g.value(y)[i] - r[i]));
      if (trial % 5 == 0)
        grad = std::max(grad, grad_error(
                                  [dir](Graph<double>& gg, const std::vector<Var>& v) {
                                    return project(gg, ops::selective_scan_core(gg, v[0], v[1], v[2], v[3], v[4], v[5], dir), 9);
                                  },
                                  in, 1e-5));
    }
  }
  // Full layer (projections, softplus step) through the bound parameters.
  ParameterStore<double> s;
  init_ssm_params(s, "ssm", 3, 2, 5);
  const auto x = random_tensor(rng, {5, 3});
  std::vector<Tensor<double>> params;
  for (const auto& name : s.names()) params.push_back(s.value(name));
  const auto names = s.names();
  grad = std::max(grad, grad_error(
                            [&](Graph<double>& g, const std::vector<Var>& v) {
                              SsmVars sv;
                              auto at = [&](const char* suffix) {
                                for (std::size_t i = 0; i < names.size(); ++i)
                                  if (names[i] == std::string("ssm") + suffix) return v[i + 1];
                                return Var{};
                              };
                              sv = {at(".a_log"), at(".d"), at(".dt.w"), at(".dt.b"), at(".b.w"), at(".c.w")};
                              return project(g, selective_scan(g, v[0], sv, ops::ScanDirection::kBackward), 4);
                            },
                            [&] {
                              std::vector<Tensor<double>> all{x};
                              all.insert(all.end(), params.begin(), params.end());
                              return all;
                            }(),
                            1e-5));
  o.pass = worst <= 1e-10 && grad < 1e-3;
  o.detail = "max |y - ref| " + num(worst) + " on 50 instances x 2 directions; worst gradient rel. error " + num(grad);
  return o;
}

Outcome deform_check() {
  Outcome o;
  Rng rng(103);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int cin = 1 + static_cast<int>(rng.below(3)), cout = 1 + static_cast<int>(rng.below(3));
    const int h = 3 + static_cast<int>(rng.below(6)), w = 3 + static_cast<int>(rng.below(6)), k = 3;
    const auto x = random_tensor(rng, {cin, h, w}), wt = random_tensor(rng, {cout, cin, k, k}),
               b = random_tensor(rng, {cout});
    Graph<double> g;
    const auto y = g.value(ops::deform_conv2d(g, g.input(x), g.input(Tensor<double>({2 * k * k, h, w})),
                                              g.input(wt), g.input(b)));
    const auto r = oracle::conv2d_reference(x.vec(), cin, h, w, wt.vec(), cout, k, b.vec());
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(y[i] - r[i]));
  }
  double grad = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const int k = 3, h = 4, w = 5;
    const auto x = random_tensor(rng, {2, h, w}), wt = random_tensor(rng, {2, 2, k, k}), b = random_tensor(rng, {2});
    auto off = random_tensor(rng, {2 * k * k, h, w}, -1.5, 1.5);
    // A sample within eps of an integer sits on a kink of the bilinear kernel.
    const double eps = 1e-5;
    grad = std::max(grad, grad_error(
                              [](Graph<double>& g, const std::vector<Var>& v) {
                                return project(g, ops::deform_conv2d(g, v[0], v[1], v[2], v[3]), 2);
                              },
                              {x, off, wt, b}, eps, [&](std::size_t input, std::size_t i) {
                                if (input != 1) return false;
                                const double frac = off[i] - std::floor(off[i]);
                                return frac < 10 * eps || frac > 1 - 10 * eps;
                              }));
  }
  o.pass = worst <= 1e-5 && grad < 1e-3;
  o.detail = "zero-offset max |y - conv| " + num(worst) + " over 100 draws; worst gradient rel. error " + num(grad);
  return o;
}

Outcome hfd_check() {
  Outcome o;
  Rng rng(104);
  double worst = 0;
  bool direction_ok = true, routing_ok = true, masked_ok = true;
  double route_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(4));
    auto pm = random_probs(rng, c, 8, 8, 2), pd = random_probs(rng, c, 8, 8, 2);
    LabelGrid lab;
    lab.shape = {1, 8, 8};
    lab.num_categories = c;
    for (int p = 0; p < 64; ++p) lab.labels.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c))));
    HardMask hard = HardMask::all(8, 8, 0);
    for (auto& v : hard.mask) v = rng.uniform() < 0.6;
    const auto v = hfd_values(pm, pd, lab, hard);
    const auto r = oracle::hfd_reference(pm.vec(), pd.vec(), std::vector<int>(lab.labels.begin(), lab.labels.end()),
                                         std::vector<int>(hard.mask.begin(), hard.mask.end()), c, 64);
    worst = std::max({worst, std::abs(v.vim_student - r.l_pm), std::abs(v.dcnn_student - r.l_pd)});
    direction_ok = direction_ok && std::vector<int>(v.direction.m.begin(), v.direction.m.end()) == r.m;

    if (trial % 10 == 0) {
      const auto& dir = v.direction;
      // Each term's gradient reaches its student only and equals the finite
      // difference of that term with the teacher held fixed.
      for (int term = 0; term < 2; ++term) {
        Graph<double> g;
        const Var m = g.input(pm, true), d = g.input(pd, true);
        const auto l = hfd_losses(g, m, d, dir, hard);
        g.backward(term == 0 ? l.vim_student : l.dcnn_student);
        const Var teacher = term == 0 ? d : m;
        if (g.has_grad(teacher))
          for (double x : g.grad(teacher).vec()) routing_ok = routing_ok && x == 0.0;
      }
      route_err = std::max(route_err, grad_error(
                                          [&](Graph<double>& g, const std::vector<Var>& in) {
                                            return hfd_losses(g, in[0], g.input(pd), dir, hard).vim_student;
                                          },
                                          {pm}, 1e-6));
      route_err = std::max(route_err, grad_error(
                                          [&](Graph<double>& g, const std::vector<Var>& in) {
                                            return hfd_losses(g, g.input(pm), in[0], dir, hard).dcnn_student;
                                          },
                                          {pd}, 1e-6));
    }
    // Perturb every masked-out pixel of both maps.
    const double before = v.total;
    for (int p = 0; p < 64; ++p) {
      if (hard.mask[static_cast<std::size_t>(p)]) continue;
      const auto a = random_probs(rng, c, 1, 1), b = random_probs(rng, c, 1, 1);
      for (int k = 0; k < c; ++k) {
        pm[static_cast<std::size_t>(k) * 64 + p] = a[static_cast<std::size_t>(k)];
        pd[static_cast<std::size_t>(k) * 64 + p] = b[static_cast<std::size_t>(k)];
      }
    }
    masked_ok = masked_ok && hfd_values(pm, pd, lab, hard).total == before;
  }
  routing_ok = routing_ok && route_err < 1e-3;
  o.pass = worst <= 1e-6 && direction_ok && routing_ok && masked_ok;
  o.detail = "max |loss - ref| " + num(worst) + " on 100 8x8 fixtures; direction " + (direction_ok ? "ok" : "MISMATCH") +
             "; routing " + (routing_ok ? "ok" : "BROKEN") + " (FD rel. error " + num(route_err) + "); masked pixels " +
             (masked_ok ? "inert" : "CHANGE loss_3");
  return o;
}

ModelConfig four_level_model(int categories) {
  ModelConfig m;
  m.unet.depth = 4;
  m.unet.num_categories = categories;
  return m;
}

std::vector<Sample> phantom_set(int n, int size, int categories, std::uint64_t seed) {
  std::vector<Sample> out;
  const PhantomSpec spec = PhantomSpec::standard(size, categories);
  for (int i = 0; i < n; ++i) out.push_back(generate_phantom(spec, derive_seed(seed, "case" + std::to_string(i))));
  return out;
}

Outcome reduction_check() {
  Outcome o;
  const auto model = four_level_model(5);
  TrainConfig t;
  t.alpha = 0;
  t.beta = 0;
  t.batch_size = 2;
  const auto data = phantom_set(4, 64, 5, 7);
  bool same = true;
  std::size_t compared = 0;
  // One optimizer step at a time, so every intermediate trajectory point is compared.
  Checkpoint full = init_checkpoint(model, t, TrainMode::kFull, 64, 64);
  Checkpoint plain = init_checkpoint(model, t, TrainMode::kPlain, 64, 64);
  for (int step = 1; step <= 3; ++step) {
    TrainOptions opts;
    opts.max_steps = step;
    train(full, data, opts);
    train(plain, data, opts);
    for (const auto& name : plain.params.names()) {
      const auto& a = full.params.value(name).vec();
      const auto& b = plain.params.value(name).vec();
      same = same && a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
      ++compared;
    }
  }
  o.pass = same && full.step == 3 && plain.step == 3;
  o.detail = std::to_string(compared) + " backbone tensors compared after steps 1..3: " +
             (same ? "bitwise identical" : "DIFFER");
  return o;
}

Outcome monotone_check() {
  Outcome o;
  Rng rng(106);
  const std::vector<double> ts{0.1, 0.05, 0.01, 0.001, 0.0001};
  bool ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    UncertaintyMap u{16, 16, {}};
    for (int i = 0; i < 256; ++i) {
      // Mix of exact endpoints, values on the thresholds and spread values.
      const double r = rng.uniform();
      u.values.push_back(r < 0.1 ? 0.0 : r < 0.2 ? ts[rng.below(ts.size())] : r < 0.25 ? 1.0 : std::pow(rng.uniform(), 6));
    }
    std::size_t prev = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::size_t n = binarize(u, ts[i]).count();
      if (i > 0 && n < prev) ok = false;  // T decreasing along ts: counts must not drop
      prev = n;
    }
  }
  o.pass = ok;
  o.detail = "200 maps, T in {0.1, 0.05, 0.01, 0.001, 0.0001}: retained counts " +
             std::string(ok ? "non-increasing in T" : "NOT monotone");
  return o;
}

// Desk-scale settings: small branches on every decoder level, batch 1.
struct AblationOptions {
  int epochs = 30;
  int batch = 1;
  double lr = 0.001;
  double momentum = 0.99;
  int base_channels = 16;
  int vim_embed = 16;
  int vim_state = 8;
  int dcnn_width = 8;
  std::string levels = "all";
  int seeds = 3;
};

Outcome ablation_check(const AblationOptions& a) {
  Outcome o;
  const PhantomSpec spec = PhantomSpec::standard(64, 5);
  std::vector<Sample> train_set, val_set;
  for (int i = 0; i < 40; ++i)
    (i < 32 ? train_set : val_set).push_back(generate_phantom(spec, derive_seed(2024, "ablation" + std::to_string(i))));
  const int cross = 3;
  double mean[3] = {0, 0, 0}, xdsc[3] = {0, 0, 0};
  std::string per_seed;
  for (int s = 0; s < a.seeds; ++s) {
    ModelConfig m = four_level_model(5);
    m.unet.base_channels = a.base_channels;
    m.vim.embed_dim = a.vim_embed;
    m.vim.state_dim = a.vim_state;
    m.dcnn.width = a.dcnn_width;
    TrainConfig t;
    t.epochs = a.epochs;
    t.batch_size = a.batch;
    t.lr = a.lr;
    t.momentum = a.momentum;
    t.levels = a.levels == "all" ? LevelSelection::kAll : LevelSelection::kFinest;
    t.seed = 42 + static_cast<std::uint64_t>(s);
    for (int k = 0; k < 3; ++k) {
      TrainConfig tk = t;
      if (k == 1) tk.beta = 0;  // branches without distillation
      const Checkpoint c = k == 0 ? train_plain_unet(m, tk, train_set) : train_model(m, tk, train_set);
      const auto r = evaluate(c, val_set);
      mean[k] += mean_dsc(r) / a.seeds;
      xdsc[k] += mean_category_dsc(r, cross) / a.seeds;
      per_seed += " s" + std::to_string(s) + "c" + std::to_string(k) + "=" + num(mean_dsc(r), "%.2f") + "/" +
                  num(mean_category_dsc(r, cross), "%.2f");
    }
  }
  const bool order = mean[0] <= mean[1] && mean[1] <= mean[2];
  const bool cross_gain = xdsc[2] - xdsc[0] >= 2.0;
  o.pass = order && cross_gain;
  o.detail = "mean DSC baseline " + num(mean[0], "%.2f") + ", +branches " + num(mean[1], "%.2f") + ", full " +
             num(mean[2], "%.2f") + " (order " + (order ? "holds" : "VIOLATED") + "); X-organ DSC " +
             num(xdsc[0], "%.2f") + " -> " + num(xdsc[2], "%.2f") + " (gain " + num(xdsc[2] - xdsc[0], "%.2f") +
             "); per seed mean/X:" + per_seed;
  return o;
}

Outcome metric_check() {
  Outcome o;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 36; ++i)
    for (int j = i + 1; j < 36; ++j) pairs.emplace_back(i, j);
  auto make = [](int a, int b) {
    LabelGrid l;
    l.shape = {1, 6, 6};
    l.labels.assign(36, 0);
    l.labels[static_cast<std::size_t>(a)] = l.labels[static_cast<std::size_t>(b)] = 1;
    return l;
  };
  std::size_t cases = 0, dsc_bad = 0, defined_bad = 0;
  double worst = 0;
  for (const auto& [a0, a1] : pairs) {
    const auto a = make(a0, a1);
    const std::vector<int> ai(a.labels.begin(), a.labels.end());
    for (const auto& [b0, b1] : pairs) {
      const auto b = make(b0, b1);
      const std::vector<int> bi(b.labels.begin(), b.labels.end());
      if (dsc(a, b, 1).value != oracle::dsc_reference(ai, bi)) ++dsc_bad;
      for (const auto& [sy, sx] : {std::pair{1.0, 1.0}, std::pair{0.7, 2.5}}) {
        const auto r = assd(a, b, 1, {1.0, sy, sx});
        const double ref = oracle::assd_reference(ai, bi, 6, 6, sy, sx);
        if (r.undefined != (ref < 0)) ++defined_bad;
        if (!r.undefined) worst = std::max(worst, std::abs(r.value - ref));
      }
      ++cases;
    }
  }
  o.pass = dsc_bad == 0 && defined_bad == 0 && worst <= 1e-9;
  o.detail = std::to_string(cases) + " mask pairs: DSC mismatches " + std::to_string(dsc_bad) +
             ", max |ASSD - ref| " + num(worst) + " mm";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome e2e_check(const std::string& cli, const fs::path& work) {
  Outcome o;
  std::vector<std::string> csvs;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = work / ("run" + std::to_string(run));
    fs::remove_all(dir);
    const std::string common = " --quiet --seed 7 --data " + (dir / "data").string() + " --out " + (dir / "out").string();
    const std::vector<std::string> steps{
        "generate-data --quiet --seed 7 --out " + (dir / "data").string(),
        "train --epochs 20 --batch-size 4" + common,
        "evaluate" + common};
    for (const auto& s : steps) {
      const std::string cmd = cli + " " + s + " > " + (work / "e2e.log").string() + " 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        o.pass = false;
        o.detail = "command failed: " + s + "\n" + slurp(work / "e2e.log");
        return o;
      }
    }
    csvs.push_back(slurp(dir / "out" / "metrics.csv"));
  }
  o.pass = !csvs[0].empty() && csvs[0] == csvs[1];
  o.detail = "metrics.csv " + std::to_string(csvs[0].size()) + " bytes, runs " +
             (csvs[0] == csvs[1] ? "byte-identical" : "DIFFER");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hurmacl acceptance run"};
  std::string cli, work = "acceptance_work";
  std::vector<int> only;
  AblationOptions abl;
  app.add_option("--cli", cli, "path of the hurmacl executable (criterion 9)");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--ablation-epochs", abl.epochs);
  app.add_option("--ablation-batch", abl.batch);
  app.add_option("--ablation-lr", abl.lr);
  app.add_option("--ablation-momentum", abl.momentum);
  app.add_option("--ablation-base-channels", abl.base_channels);
  app.add_option("--ablation-levels", abl.levels)->check(CLI::IsMember({"all", "finest"}));
  app.add_option("--ablation-seeds", abl.seeds);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "entropy correctness", 1, entropy_check},
      {2, "scan parity and gradients", 30, scan_check},
      {3, "deformable degeneracy and gradients", 30, deform_check},
      {4, "distillation parity and routing", 60, hfd_check},
      {5, "alpha = beta = 0 reduces to the plain U-Net", 0, reduction_check},
      {6, "mask monotonicity", 1, monotone_check},
      {7, "ablation direction", 1800, [&] { return ablation_check(abl); }},
      {8, "metric oracles", 60, metric_check},
      {9, "end-to-end determinism", 600, [&] {
         if (cli.empty()) return Outcome{false, "no --cli given"};
         return e2e_check(cli, work);
       }},
  };
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = seconds_since(t0);
    const bool in_time = c.budget_s <= 0 || s <= c.budget_s;
    if (!in_time) o.detail += "; over the " + num(c.budget_s, "%.0f") + " s budget";
    o.pass = o.pass && in_time;
    all = all && o.pass;
    std::printf("%s criterion %d (%s) [%.2f s]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, s, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
