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

#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace hurmacl::oracle {

Vec scan_reference(const Vec& x, const ScanParams& p, bool reverse) {
  const int L = p.length, E = p.channels, N = p.state;
  Vec y(static_cast<std::size_t>(L) * E, 0.0);
  for (int e = 0; e < E; ++e) {
    Vec h(static_cast<std::size_t>(N), 0.0);
    for (int step = 0; step < L; ++step) {
      const int t = reverse ? L - 1 - step : step;
      const double xt = x[t * E + e];
      const double dt = p.delta[t * E + e];
      double out = 0.0;
      for (int n = 0; n < N; ++n) {
        const double a = -std::exp(p.a_log[e * N + n]);
        const double abar = std::exp(dt * a);
        const double bbar = dt * p.b[t * N + n];
        h[n] = abar * h[n] + bbar * xt;
        out += p.c[t * N + n] * h[n];
      }
      y[t * E + e] = out + p.d[e] * xt;
    }
  }
  return y;
}

Vec conv2d_reference(const Vec& x, int cin, int h, int w, const Vec& weight, int cout, int k,
                     const Vec& bias) {
  const int pad = k / 2;
  Vec out(static_cast<std::size_t>(cout) * h * w, 0.0);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        double s = bias.empty() ? 0.0 : bias[o];
        for (int c = 0; c < cin; ++c)
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
              const int sy = y + i - pad, sx = xx + j - pad;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              s += weight[((o * cin + c) * k + i) * k + j] * x[(c * h + sy) * w + sx];
            }
        out[(o * h + y) * w + xx] = s;
      }
  return out;
}

namespace {

double pixel(const Vec& x, int c, int h, int w, int y, int xx) {
  if (y < 0 || y >= h || xx < 0 || xx >= w) return 0.0;
  return x[(c * h + y) * w + xx];
}

double bilinear(const Vec& x, int c, int h, int w, double py, double px) {
  const double fy = std::floor(py), fx = std::floor(px);
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const double ly = py - fy, lx = px - fx;
  return (1 - ly) * (1 - lx) * pixel(x, c, h, w, y0, x0) + (1 - ly) * lx * pixel(x, c, h, w, y0, x0 + 1) +
         ly * (1 - lx) * pixel(x, c, h, w, y0 + 1, x0) + ly * lx * pixel(x, c, h, w, y0 + 1, x0 + 1);
}

}  // namespace

Vec deform_conv_reference(const Vec& x, int cin, int h, int w, const Vec& offsets,
                          const Vec& weight, int cout, int k, const Vec& bias) {
  const int pad = k / 2;
  Vec out(static_cast<std::size_t>(cout) * h * w, 0.0);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        double s = bias.empty() ? 0.0 : bias[o];
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const int t = i * k + j;
            const double py = y + i - pad + offsets[(2 * t * h + y) * w + xx];
            const double px = xx + j - pad + offsets[((2 * t + 1) * h + y) * w + xx];
            for (int c = 0; c < cin; ++c)
              s += weight[((o * cin + c) * k + i) * k + j] * bilinear(x, c, h, w, py, px);
          }
        out[(o * h + y) * w + xx] = s;
      }
  return out;
}

Vec entropy_reference(const Vec& probs, int categories, int pixels) {
  Vec u(static_cast<std::size_t>(pixels), 0.0);
  for (int p = 0; p < pixels; ++p) {
    double s = 0.0;
    for (int c = 0; c < categories; ++c) {
      const double v = probs[c * pixels + p];
      if (v > 0) s -= v * std::log(v);
    }
    u[p] = s / std::log(static_cast<double>(categories));
  }
  return u;
}

HfdReference hfd_reference(const Vec& p_m, const Vec& p_d, const std::vector<int>& labels,
                           const std::vector<int>& hard, int categories, int pixels) {
  const double floor = 1e-12;
  HfdReference r;
  r.m.assign(static_cast<std::size_t>(pixels), 0);
  int count_m = 0, count_g = 0;
  for (int p = 0; p < pixels; ++p) {
    if (!hard[p]) {
      ++count_g;
      continue;
    }
    const double ce_m = -std::log(std::max(p_m[labels[p] * pixels + p], floor));
    const double ce_d = -std::log(std::max(p_d[labels[p] * pixels + p], floor));
    if (ce_m < ce_d) {
      r.m[p] = 1;
      ++count_m;
    }
  }
  double sum_pm = 0.0, sum_pd = 0.0;
  for (int p = 0; p < pixels; ++p) {
    if (!hard[p]) continue;
    double kl = 0.0;
    for (int c = 0; c < categories; ++c) {
      const double a = std::max(p_m[c * pixels + p], floor);
      const double b = std::max(p_d[c * pixels + p], floor);
      kl += p_m[c * pixels + p] * std::log(a / b);
    }
    if (r.m[p]) {
      sum_pd += kl;
    } else {
      sum_pm += kl;
    }
  }
  const int denom_pm = pixels - count_m - count_g;
  r.l_pm = denom_pm > 0 ? sum_pm / denom_pm : 0.0;
  r.l_pd = count_m > 0 ? sum_pd / count_m : 0.0;
  return r;
}

namespace {

std::vector<std::pair<int, int>> boundary(const std::vector<int>& mask, int h, int w) {
  auto inside = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w && mask[y * w + x]; };
  std::vector<std::pair<int, int>> pts;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (inside(y, x) &&
          (!inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) || !inside(y, x + 1)))
        pts.emplace_back(y, x);
  return pts;
}

}  // namespace

double assd_reference(const std::vector<int>& pred, const std::vector<int>& gt, int h, int w,
                      double sy, double sx) {
  const auto a = boundary(pred, h, w);
  const auto b = boundary(gt, h, w);
  if (a.empty() || b.empty()) return -1.0;
  auto directed = [&](const std::vector<std::pair<int, int>>& from,
                      const std::vector<std::pair<int, int>>& to) {
    double total = 0.0;
    for (const auto& [y0, x0] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [y1, x1] : to)
        best = std::min(best, std::hypot((y0 - y1) * sy, (x0 - x1) * sx));
      total += best;
    }
    return total / static_cast<double>(from.size());
  };
  return (directed(a, b) + directed(b, a)) / 2.0;
}

double dsc_reference(const std::vector<int>& pred, const std::vector<int>& gt) {
  int a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    a += pred[i] != 0;
    b += gt[i] != 0;
    both += pred[i] != 0 && gt[i] != 0;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * both / (a + b);
}

Vec finite_difference_grad(const std::function<double(const Vec&)>& f, const Vec& x, double eps) {
  Vec g(x.size(), 0.0);
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

}  // namespace hurmacl::oracle
