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

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "hurmacl/autograd.hpp"
#include "hurmacl/core_data.hpp"
#include "hurmacl/ops.hpp"
#include "hurmacl/rng.hpp"
#include "oracles.hpp"

namespace hurmacl::test {

inline Tensor<double> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Random point of the simplex per pixel, [C, H, W].
inline Tensor<double> random_probs(Rng& rng, int c, int h, int w, double sharpness = 1.0) {
  Tensor<double> t({c, h, w});
  const int hw = h * w;
  for (int p = 0; p < hw; ++p) {
    double s = 0;
    for (int k = 0; k < c; ++k) {
      t[static_cast<std::size_t>(k) * hw + p] = std::exp(sharpness * rng.normal());
      s += t[static_cast<std::size_t>(k) * hw + p];
    }
    for (int k = 0; k < c; ++k) t[static_cast<std::size_t>(k) * hw + p] /= s;
  }
  return t;
}

inline LabelGrid random_labels(Rng& rng, int c, int h, int w) {
  LabelGrid l;
  l.shape = {1, h, w};
  l.num_categories = c;
  l.labels.resize(static_cast<std::size_t>(h) * w);
  for (auto& v : l.labels) v = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c)));
  return l;
}

inline std::vector<double> to_vec(const Tensor<double>& t) { return t.vec(); }

inline Var sum_weighted(Graph<double>& g, Var x, std::uint64_t seed) {
  // Random fixed projection so every output element matters.
  Rng rng(seed);
  Tensor<double> w(g.value(x).shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1, 1);
  Var m = ops::mul(g, x, g.input(w));
  // Sum via a 1-row linear layer over the flattened values.
  Tensor<double> ones({1, static_cast<int>(w.size())}, 1.0);
  Var flat = g.make(g.value(m).reshaped({1, static_cast<int>(w.size())}), true,
                    [m](Graph<double>& gg, const Tensor<double>& og) {
                      if (double* gm = gg.grad_buffer(m))
                        for (std::size_t i = 0; i < og.size(); ++i) gm[i] += og[i];
                    });
  return ops::linear(g, flat, g.input(ones), Var{});
}

using Builder = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

struct GradReport {
  double worst = 0;  // max |a - n| / (max(|a|, |n|) + floor)
  std::size_t checked = 0;
};

// Compares reverse-mode gradients of a scalar graph output with central
// differences for every element of every input.
inline GradReport grad_check(const Builder& build, const std::vector<Tensor<double>>& inputs,
                             double eps = 1e-4, double floor = 1e-7,
                             const std::function<bool(std::size_t, std::size_t)>& skip = {}) {
  Graph<double> g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.input(t, true));
  const Var out = build(g, vars);
  g.backward(out);
  GradReport rep;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto f = [&](const std::vector<double>& x) {
      Graph<double> h;
      std::vector<Var> vs;
      for (std::size_t j = 0; j < inputs.size(); ++j)
        vs.push_back(h.input(j == i ? Tensor<double>(inputs[j].shape(), x) : inputs[j], false));
      return h.item(build(h, vs));
    };
    const auto numeric = oracle::finite_difference_grad(f, inputs[i].vec(), eps);
    const bool has = g.has_grad(vars[i]);
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      if (skip && skip(i, k)) continue;
      const double a = has ? g.grad(vars[i])[k] : 0.0;
      const double n = numeric[k];
      const double err = std::abs(a - n) / (std::max(std::abs(a), std::abs(n)) + floor);
      if (std::abs(a - n) > floor) rep.worst = std::max(rep.worst, err);
      ++rep.checked;
    }
  }
  return rep;
}

// Same comparison for ParameterStore entries, probing at most `per_param`
// elements of each parameter (chosen by a seeded draw).
inline GradReport param_grad_check(ParameterStore<double>& store,
                                   const std::function<Var(Graph<double>&)>& build,
                                   std::size_t per_param = 6, double eps = 1e-5,
                                   double floor = 1e-7) {
  store.zero_grad();
  {
    Graph<double> g;
    g.backward(build(g));
    g.accumulate_param_grads();
  }
  GradReport rep;
  Rng pick(4242);
  for (auto& [name, e] : store) {
    for (std::size_t k = 0; k < std::min(per_param, e.value.size()); ++k) {
      const std::size_t i = static_cast<std::size_t>(pick.below(e.value.size()));
      const double x0 = e.value[i];
      e.value[i] = x0 + eps;
      double up, down;
      {
        Graph<double> g;
        up = g.item(build(g));
      }
      e.value[i] = x0 - eps;
      {
        Graph<double> g;
        down = g.item(build(g));
      }
      e.value[i] = x0;
      const double n = (up - down) / (2 * eps), a = e.grad[i];
      const double err = std::abs(a - n) / (std::max(std::abs(a), std::abs(n)) + floor);
      if (std::abs(a - n) > floor) {
        if (err > rep.worst) MESSAGE(name << "[" << i << "] analytic " << a << " numeric " << n);
        rep.worst = std::max(rep.worst, err);
      }
      ++rep.checked;
    }
  }
  return rep;
}

inline std::string tmp_path(const std::string& name) {
  return std::string(HURMACL_TEST_TMP) + "/" + name;
}

}  // namespace hurmacl::test
