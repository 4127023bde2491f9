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

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>

namespace hurmacl::ops {
namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

template <typename T>
bool any_grad(const Graph<T>& g, std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (v.valid() && g.requires_grad(v)) return true;
  return false;
}

void check(bool cond, const char* what) { require(cond, what); }

template <typename T>
T softplus_value(T v) {
  // log(1 + e^v) without overflow.
  return v > T(20) ? v : std::log1p(std::exp(v));
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// One bilinear tap: four corner indices (-1 when out of range) and weights.
template <typename T>
struct Tap {
  int idx[4];
  T w[4];
  T ly, lx;
};

template <typename T>
Tap<T> make_tap(int height, int width, T y, T x) {
  Tap<T> t{};
  const T big = T(1e6);
  if (!(std::abs(y) < big) || !(std::abs(x) < big)) {
    for (int i = 0; i < 4; ++i) {
      t.idx[i] = -1;
      t.w[i] = T(0);
    }
    return t;
  }
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  t.ly = y - static_cast<T>(y0);
  t.lx = x - static_cast<T>(x0);
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  t.w[0] = (T(1) - t.ly) * (T(1) - t.lx);
  t.w[1] = (T(1) - t.ly) * t.lx;
  t.w[2] = t.ly * (T(1) - t.lx);
  t.w[3] = t.ly * t.lx;
  for (int i = 0; i < 4; ++i)
    t.idx[i] = (ys[i] >= 0 && ys[i] < height && xs[i] >= 0 && xs[i] < width)
                   ? ys[i] * width + xs[i]
                   : -1;
  return t;
}

template <typename T>
T tap_value(const Tap<T>& t, const T* img) {
  T v = T(0);
  for (int i = 0; i < 4; ++i)
    if (t.idx[i] >= 0) v += t.w[i] * img[t.idx[i]];
  return v;
}

}  // namespace

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  require(A.shape() == B.shape(), "add: shape mismatch " + shape_str(A.shape()) + " vs " +
                                      shape_str(B.shape()));
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return g.make(std::move(out), any_grad(g, {a, b}), [a, b](Graph<T>& gg, const Tensor<T>& og) {
    if (T* ga = gg.grad_buffer(a))
      for (std::size_t i = 0; i < og.size(); ++i) ga[i] += og[i];
    if (T* gb = gg.grad_buffer(b))
      for (std::size_t i = 0; i < og.size(); ++i) gb[i] += og[i];
  });
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  require(A.shape() == B.shape(), "mul: shape mismatch");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return g.make(std::move(out), any_grad(g, {a, b}), [a, b](Graph<T>& gg, const Tensor<T>& og) {
    const auto& A = gg.value(a);
    const auto& B = gg.value(b);
    if (T* ga = gg.grad_buffer(a))
      for (std::size_t i = 0; i < og.size(); ++i) ga[i] += og[i] * B[i];
    if (T* gb = gg.grad_buffer(b))
      for (std::size_t i = 0; i < og.size(); ++i) gb[i] += og[i] * A[i];
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T s) {
  const auto& A = g.value(a);
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * s;
  const bool rg = s != T(0) && g.requires_grad(a);
  return g.make(std::move(out), rg, [a, s](Graph<T>& gg, const Tensor<T>& og) {
    if (T* ga = gg.grad_buffer(a))
      for (std::size_t i = 0; i < og.size(); ++i) ga[i] += og[i] * s;
  });
}

template <typename T>
Var leaky_relu(Graph<T>& g, Var x, T slope) {
  const auto& X = g.value(x);
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] > T(0) ? X[i] : X[i] * slope;
  return g.make(std::move(out), g.requires_grad(x), [x, slope](Graph<T>& gg, const Tensor<T>& og) {
    const auto& X = gg.value(x);
    T* gx = gg.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) gx[i] += X[i] > T(0) ? og[i] : og[i] * slope;
  });
}

template <typename T>
Var silu(Graph<T>& g, Var x) {
  const auto& X = g.value(x);
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] * sigmoid(X[i]);
  return g.make(std::move(out), g.requires_grad(x), [x](Graph<T>& gg, const Tensor<T>& og) {
    const auto& X = gg.value(x);
    T* gx = gg.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) {
      const T s = sigmoid(X[i]);
      gx[i] += og[i] * (s + X[i] * s * (T(1) - s));
    }
  });
}

template <typename T>
Var softplus(Graph<T>& g, Var x) {
  const auto& X = g.value(x);
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus_value(X[i]);
  return g.make(std::move(out), g.requires_grad(x), [x](Graph<T>& gg, const Tensor<T>& og) {
    const auto& X = gg.value(x);
    T* gx = gg.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) gx[i] += og[i] * sigmoid(X[i]);
  });
}

template <typename T>
Var conv2d(Graph<T>& g, Var x, Var w, Var b, int pad) {
  const auto& X = g.value(x);
  const auto& W = g.value(w);
  check(X.rank() == 3 && W.rank() == 4, "conv2d: expects x [Cin,H,W] and w [Cout,Cin,k,k]");
  const int cin = X.dim(0), h = X.dim(1), wd = X.dim(2);
  const int cout = W.dim(0), k = W.dim(2);
  require(W.dim(1) == cin && W.dim(3) == k,
          "conv2d: weight " + shape_str(W.shape()) + " does not match input " + shape_str(X.shape()));
  const int ho = h + 2 * pad - k + 1, wo = wd + 2 * pad - k + 1;
  check(ho > 0 && wo > 0, "conv2d: output would be empty");
  const int rows = cin * k * k, hw = ho * wo;
  const bool direct = k == 1 && pad == 0;

  auto cols = std::make_shared<std::vector<T>>();
  if (!direct) {
    cols->assign(static_cast<std::size_t>(rows) * hw, T(0));
    for (int c = 0; c < cin; ++c)
      for (int ki = 0; ki < k; ++ki)
        for (int kj = 0; kj < k; ++kj) {
          T* dst = cols->data() + static_cast<std::size_t>((c * k + ki) * k + kj) * hw;
          const T* src = X.data() + static_cast<std::size_t>(c) * h * wd;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy + ki - pad;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox + kj - pad;
              if (ix >= 0 && ix < wd) dst[oy * wo + ox] = src[iy * wd + ix];
            }
          }
        }
  }
  const T* colp = direct ? X.data() : cols->data();

  Tensor<T> out({cout, ho, wo});
  MapM<T> O(out.data(), cout, hw);
  O.noalias() = CMapM<T>(W.data(), cout, rows) * CMapM<T>(colp, rows, hw);
  if (b.valid()) {
    const auto& B = g.value(b);
    for (int o = 0; o < cout; ++o) O.row(o).array() += B[static_cast<std::size_t>(o)];
  }

  auto bw = [x, w, b, pad, k, cin, h, wd, cout, ho, wo, rows, hw, direct, cols](
                Graph<T>& gg, const Tensor<T>& og) {
    CMapM<T> G(og.data(), cout, hw);
    const T* colp = direct ? gg.value(x).data() : cols->data();
    if (T* gw = gg.grad_buffer(w))
      MapM<T>(gw, cout, rows).noalias() += G * CMapM<T>(colp, rows, hw).transpose();
    if (b.valid())
      if (T* gb = gg.grad_buffer(b))
        for (int o = 0; o < cout; ++o) gb[o] += G.row(o).sum();
    if (T* gx = gg.grad_buffer(x)) {
      const auto& W = gg.value(w);
      if (direct) {
        MapM<T>(gx, cin, hw).noalias() += CMapM<T>(W.data(), cout, rows).transpose() * G;
      } else {
        MatRM<T> dcols = CMapM<T>(W.data(), cout, rows).transpose() * G;
        for (int c = 0; c < cin; ++c)
          for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
              const T* src = dcols.data() + static_cast<std::size_t>((c * k + ki) * k + kj) * hw;
              T* dst = gx + static_cast<std::size_t>(c) * h * wd;
              for (int oy = 0; oy < ho; ++oy) {
                const int iy = oy + ki - pad;
                if (iy < 0 || iy >= h) continue;
                for (int ox = 0; ox < wo; ++ox) {
                  const int ix = ox + kj - pad;
                  if (ix >= 0 && ix < wd) dst[iy * wd + ix] += src[oy * wo + ox];
                }
              }
            }
      }
    }
  };
  return g.make(std::move(out), any_grad(g, {x, w, b}), bw);
}

template <typename T>
Var conv_transpose2x2(Graph<T>& g, Var x, Var w, Var b) {
  const auto& X = g.value(x);
  const auto& W = g.value(w);
  check(X.rank() == 3 && W.rank() == 4 && W.dim(2) == 2 && W.dim(3) == 2,
        "conv_transpose2x2: expects x [Cin,H,W] and w [Cin,Cout,2,2]");
  const int cin = X.dim(0), h = X.dim(1), wd = X.dim(2), cout = W.dim(1);
  require(W.dim(0) == cin, "conv_transpose2x2: channel mismatch");
  const int hw = h * wd;
  MatRM<T> Y = CMapM<T>(W.data(), cin, cout * 4).transpose() * CMapM<T>(X.data(), cin, hw);
  Tensor<T> out({cout, 2 * h, 2 * wd});
  const auto& B = g.value(b);
  for (int o = 0; o < cout; ++o)
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) {
        const T* src = Y.data() + static_cast<std::size_t>(o * 4 + a * 2 + c) * hw;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < wd; ++j)
            out.at(o, 2 * i + a, 2 * j + c) = src[i * wd + j] + B[static_cast<std::size_t>(o)];
      }
  auto bw = [x, w, b, cin, cout, h, wd, hw](Graph<T>& gg, const Tensor<T>& og) {
    MatRM<T> dY(cout * 4, hw);
    for (int o = 0; o < cout; ++o)
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) {
          T* dst = dY.data() + static_cast<std::size_t>(o * 4 + a * 2 + c) * hw;
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < wd; ++j) dst[i * wd + j] = og.at(o, 2 * i + a, 2 * j + c);
        }
    if (T* gw = gg.grad_buffer(w))
      MapM<T>(gw, cin, cout * 4).noalias() +=
          CMapM<T>(gg.value(x).data(), cin, hw) * dY.transpose();
    if (T* gb = gg.grad_buffer(b)) {
      const int ohw = 4 * hw;
      for (int o = 0; o < cout; ++o) {
        T s = T(0);
        for (int i = 0; i < ohw; ++i) s += og[static_cast<std::size_t>(o) * ohw + i];
        gb[o] += s;
      }
    }
    if (T* gx = gg.grad_buffer(x))
      MapM<T>(gx, cin, hw).noalias() += CMapM<T>(gg.value(w).data(), cin, cout * 4) * dY;
  };
  return g.make(std::move(out), any_grad(g, {x, w, b}), bw);
}

template <typename T>
Var instance_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps) {
  const auto& X = g.value(x);
  check(X.rank() == 3, "instance_norm: expects [K,H,W]");
  const int k = X.dim(0);
  const int n = X.dim(1) * X.dim(2);
  const auto& G = g.value(gamma);
  const auto& B = g.value(beta);
  check(static_cast<int>(G.size()) == k && static_cast<int>(B.size()) == k,
        "instance_norm: affine size mismatch");
  Tensor<T> out(X.shape());
  auto xhat = std::make_shared<std::vector<T>>(X.size());
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const T* src = X.data() + static_cast<std::size_t>(c) * n;
    double mean = 0, var = 0;
    for (int i = 0; i < n; ++i) mean += src[i];
    mean /= n;
    for (int i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= n;
    const T is = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    (*inv_std)[static_cast<std::size_t>(c)] = is;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = static_cast<std::size_t>(c) * n + i;
      (*xhat)[idx] = (src[i] - static_cast<T>(mean)) * is;
      out[idx] = G[static_cast<std::size_t>(c)] * (*xhat)[idx] + B[static_cast<std::size_t>(c)];
    }
  }
  auto bw = [x, gamma, beta, k, n, xhat, inv_std](Graph<T>& gg, const Tensor<T>& og) {
    const auto& G = gg.value(gamma);
    T* gx = gg.grad_buffer(x);
    T* ggm = gg.grad_buffer(gamma);
    T* gbt = gg.grad_buffer(beta);
    for (int c = 0; c < k; ++c) {
      const std::size_t off = static_cast<std::size_t>(c) * n;
      double sdy = 0, sdyx = 0;
      for (int i = 0; i < n; ++i) {
        sdy += og[off + i];
        sdyx += static_cast<double>(og[off + i]) * (*xhat)[off + i];
      }
      if (ggm) ggm[c] += static_cast<T>(sdyx);
      if (gbt) gbt[c] += static_cast<T>(sdy);
      if (gx) {
        const double gm = G[static_cast<std::size_t>(c)];
        const double is = (*inv_std)[static_cast<std::size_t>(c)];
        for (int i = 0; i < n; ++i) {
          const double dxh = og[off + i] * gm;
          gx[off + i] += static_cast<T>(
              is * (dxh - gm * sdy / n - (*xhat)[off + i] * gm * sdyx / n));
        }
      }
    }
  };
  return g.make(std::move(out), any_grad(g, {x, gamma, beta}), bw);
}

template <typename T>
Var max_pool2(Graph<T>& g, Var x) {
  const auto& X = g.value(x);
  check(X.rank() == 3, "max_pool2: expects [K,H,W]");
  const int k = X.dim(0), h = X.dim(1), w = X.dim(2);
  require(h % 2 == 0 && w % 2 == 0, "max_pool2: spatial size must be even");
  Tensor<T> out({k, h / 2, w / 2});
  auto arg = std::make_shared<std::vector<int>>(out.size());
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < h / 2; ++i)
      for (int j = 0; j < w / 2; ++j) {
        int best = (c * h + 2 * i) * w + 2 * j;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const int idx = (c * h + 2 * i + a) * w + 2 * j + b;
            if (X[static_cast<std::size_t>(idx)] > X[static_cast<std::size_t>(best)]) best = idx;
          }
        const std::size_t o = (static_cast<std::size_t>(c) * (h / 2) + i) * (w / 2) + j;
        out[o] = X[static_cast<std::size_t>(best)];
        (*arg)[o] = best;
      }
  return g.make(std::move(out), g.requires_grad(x), [x, arg](Graph<T>& gg, const Tensor<T>& og) {
    T* gx = gg.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) gx[(*arg)[i]] += og[i];
  });
}

template <typename T>
Var concat_channels(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  require(A.rank() == 3 && B.rank() == 3 && A.dim(1) == B.dim(1) && A.dim(2) == B.dim(2),
          "concat_channels: spatial mismatch " + shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  Tensor<T> out({A.dim(0) + B.dim(0), A.dim(1), A.dim(2)});
  std::copy(A.vec().begin(), A.vec().end(), out.vec().begin());
  std::copy(B.vec().begin(), B.vec().end(), out.vec().begin() + static_cast<std::ptrdiff_t>(A.size()));
  const std::size_t na = A.size();
  return g.make(std::move(out), any_grad(g, {a, b}), [a, b, na](Graph<T>& gg, const Tensor<T>& og) {
    if (T* ga = gg.grad_buffer(a))
      for (std::size_t i = 0; i < na; ++i) ga[i] += og[i];
    if (T* gb = gg.grad_buffer(b))
      for (std::size_t i = na; i < og.size(); ++i) gb[i - na] += og[i];
  });
}

template <typename T>
Var softmax_channels(Graph<T>& g, Var logits) {
  const auto& X = g.value(logits);
  check(X.rank() == 3, "softmax_channels: expects [C,H,W]");
  const int c = X.dim(0);
  const std::size_t hw = static_cast<std::size_t>(X.dim(1)) * X.dim(2);
  Tensor<T> out(X.shape());
  for (std::size_t p = 0; p < hw; ++p) {
    T mx = X[p];
    for (int k = 1; k < c; ++k) mx = std::max(mx, X[k * hw + p]);
    T s = T(0);
    for (int k = 0; k < c; ++k) {
      const T e = std::exp(X[k * hw + p] - mx);
      out[k * hw + p] = e;
      s += e;
    }
    for (int k = 0; k < c; ++k) out[k * hw + p] /= s;
  }
  const Var self{static_cast<int>(g.size())};
  return g.make(std::move(out), g.requires_grad(logits),
                [logits, self, c, hw](Graph<T>& gg, const Tensor<T>& og) {
                  const auto& Y = gg.value(self);
                  T* gx = gg.grad_buffer(logits);
                  for (std::size_t p = 0; p < hw; ++p) {
                    T dot = T(0);
                    for (int k = 0; k < c; ++k) dot += Y[k * hw + p] * og[k * hw + p];
                    for (int k = 0; k < c; ++k)
                      gx[k * hw + p] += Y[k * hw + p] * (og[k * hw + p] - dot);
                  }
                });
}

template <typename T>
Var apply_mask(Graph<T>& g, Var x, std::span<const std::uint8_t> mask) {
  const auto& X = g.value(x);
  check(X.rank() == 3, "apply_mask: expects [K,H,W]");
  const std::size_t hw = static_cast<std::size_t>(X.dim(1)) * X.dim(2);
  require(mask.size() == hw, "apply_mask: mask size mismatch");
  auto m = std::make_shared<std::vector<std::uint8_t>>(mask.begin(), mask.end());
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) out[i] = (*m)[i % hw] ? X[i] : T(0);
  return g.make(std::move(out), g.requires_grad(x), [x, m, hw](Graph<T>& gg, const Tensor<T>& og) {
    T* gx = gg.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i)
      if ((*m)[i % hw]) gx[i] += og[i];
  });
}

template <typename T>
Var linear(Graph<T>& g, Var x, Var w, Var b) {
  const auto& X = g.value(x);
  const auto& W = g.value(w);
  check(X.rank() == 2 && W.rank() == 2, "linear: expects x [L,In] and w [Out,In]");
  const int l = X.dim(0), in = X.dim(1), o = W.dim(0);
  require(W.dim(1) == in, "linear: weight " + shape_str(W.shape()) + " vs input " + shape_str(X.shape()));
  Tensor<T> out({l, o});
  MapM<T> Y(out.data(), l, o);
  Y.noalias() = CMapM<T>(X.data(), l, in) * CMapM<T>(W.data(), o, in).transpose();
  if (b.valid()) {
    const auto& B = g.value(b);
    require(static_cast<int>(B.size()) == o, "linear: bias size mismatch");
    for (int r = 0; r < l; ++r)
      for (int c = 0; c < o; ++c) Y(r, c) += B[static_cast<std::size_t>(c)];
  }
  auto bw = [x, w, b, l, in, o](Graph<T>& gg, const Tensor<T>& og) {
    CMapM<T> G(og.data(), l, o);
    if (T* gx = gg.grad_buffer(x))
      MapM<T>(gx, l, in).noalias() += G * CMapM<T>(gg.value(w).data(), o, in);
    if (T* gw = gg.grad_buffer(w))
      MapM<T>(gw, o, in).noalias() += G.transpose() * CMapM<T>(gg.value(x).data(), l, in);
    if (b.valid())
      if (T* gb = gg.grad_buffer(b))
        for (int c = 0; c < o; ++c) gb[c] += G.col(c).sum();
  };
  return g.make(std::move(out), any_grad(g, {x, w, b}), bw);
}

template <typename T>
Var layer_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps) {
  const auto& X = g.value(x);
  check(X.rank() == 2, "layer_norm: expects [L,E]");
  const int l = X.dim(0), e = X.dim(1);
  const auto& G = g.value(gamma);
  const auto& B = g.value(beta);
  check(static_cast<int>(G.size()) == e && static_cast<int>(B.size()) == e,
        "layer_norm: affine size mismatch");
  Tensor<T> out(X.shape());
  auto xhat = std::make_shared<std::vector<T>>(X.size());
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(l));
  for (int r = 0; r < l; ++r) {
    const T* src = X.data() + static_cast<std::size_t>(r) * e;
    double mean = 0, var = 0;
    for (int i = 0; i < e; ++i) mean += src[i];
    mean /= e;
    for (int i = 0; i < e; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= e;
    const T is = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    (*inv_std)[static_cast<std::size_t>(r)] = is;
    for (int i = 0; i < e; ++i) {
      const std::size_t idx = static_cast<std::size_t>(r) * e + i;
      (*xhat)[idx] = (src[i] - static_cast<T>(mean)) * is;
      out[idx] = G[static_cast<std::size_t>(i)] * (*xhat)[idx] + B[static_cast<std::size_t>(i)];
    }
  }
  auto bw = [x, gamma, beta, l, e, xhat, inv_std](Graph<T>& gg, const Tensor<T>& og) {
    const auto& G = gg.value(gamma);
    T* gx = gg.grad_buffer(x);
    T* ggm = gg.grad_buffer(gamma);
    T* gbt = gg.grad_buffer(beta);
    for (int r = 0; r < l; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * e;
      double s1 = 0, s2 = 0;
      for (int i = 0; i < e; ++i) {
        const double dxh = static_cast<double>(og[off + i]) * G[static_cast<std::size_t>(i)];
        s1 += dxh;
        s2 += dxh * (*xhat)[off + i];
        if (ggm) ggm[i] += og[off + i] * (*xhat)[off + i];
        if (gbt) gbt[i] += og[off + i];
      }
      if (gx) {
        const double is = (*inv_std)[static_cast<std::size_t>(r)];
        for (int i = 0; i < e; ++i) {
          const double dxh = static_cast<double>(og[off + i]) * G[static_cast<std::size_t>(i)];
          gx[off + i] += static_cast<T>(is * (dxh - s1 / e - (*xhat)[off + i] * s2 / e));
        }
      }
    }
  };
  return g.make(std::move(out), any_grad(g, {x, gamma, beta}), bw);
}

namespace {

// Index of element (c, y, x) of a [C,H,W] map inside the [L, ph*pw*C] token matrix.
inline std::size_t token_index(int c, int y, int x, int channels, int width, int ph, int pw) {
  const int gw = width / pw;
  const int t = (y / ph) * gw + (x / pw);
  const int d = ((y % ph) * pw + (x % pw)) * channels + c;
  return static_cast<std::size_t>(t) * (static_cast<std::size_t>(ph) * pw * channels) + d;
}

}  // namespace

template <typename T>
Var patchify(Graph<T>& g, Var x, int ph, int pw) {
  const auto& X = g.value(x);
  check(X.rank() == 3, "patchify: expects [C,H,W]");
  const int c = X.dim(0), h = X.dim(1), w = X.dim(2);
  require(ph > 0 && pw > 0 && h % ph == 0 && w % pw == 0,
          "patchify: patch " + std::to_string(ph) + "x" + std::to_string(pw) +
              " does not divide " + std::to_string(h) + "x" + std::to_string(w));
  const int l = (h / ph) * (w / pw);
  Tensor<T> out({l, ph * pw * c});
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out[token_index(k, y, xx, c, w, ph, pw)] = X.at(k, y, xx);
  return g.make(std::move(out), g.requires_grad(x),
                [x, c, h, w, ph, pw](Graph<T>& gg, const Tensor<T>& og) {
                  T* gx = gg.grad_buffer(x);
                  for (int k = 0; k < c; ++k)
                    for (int y = 0; y < h; ++y)
                      for (int xx = 0; xx < w; ++xx)
                        gx[(static_cast<std::size_t>(k) * h + y) * w + xx] +=
                            og[token_index(k, y, xx, c, w, ph, pw)];
                });
}

template <typename T>
Var unpatchify(Graph<T>& g, Var tokens, int c, int h, int w, int ph, int pw) {
  const auto& X = g.value(tokens);
  require(X.rank() == 2 && X.dim(0) == (h / ph) * (w / pw) && X.dim(1) == ph * pw * c,
          "unpatchify: token matrix " + shape_str(X.shape()) + " does not match target");
  Tensor<T> out({c, h, w});
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at(k, y, xx) = X[token_index(k, y, xx, c, w, ph, pw)];
  return g.make(std::move(out), g.requires_grad(tokens),
                [tokens, c, h, w, ph, pw](Graph<T>& gg, const Tensor<T>& og) {
                  T* gt = gg.grad_buffer(tokens);
                  for (int k = 0; k < c; ++k)
                    for (int y = 0; y < h; ++y)
                      for (int xx = 0; xx < w; ++xx)
                        gt[token_index(k, y, xx, c, w, ph, pw)] +=
                            og[(static_cast<std::size_t>(k) * h + y) * w + xx];
                });
}

template <typename T>
Var selective_scan_core(Graph<T>& g, Var x, Var delta, Var b, Var c, Var a_log, Var d_skip,
                        ScanDirection dir) {
  const auto& X = g.value(x);
  const auto& DT = g.value(delta);
  const auto& Bm = g.value(b);
  const auto& Cm = g.value(c);
  const auto& AL = g.value(a_log);
  const auto& D = g.value(d_skip);
  check(X.rank() == 2 && AL.rank() == 2, "selective_scan: expects x [L,E], a_log [E,N]");
  const int l = X.dim(0), e = X.dim(1), n = AL.dim(1);
  require(DT.shape() == X.shape() && AL.dim(0) == e && static_cast<int>(D.size()) == e &&
              Bm.rank() == 2 && Bm.dim(0) == l && Bm.dim(1) == n && Cm.shape() == Bm.shape(),
          "selective_scan: inconsistent shapes");

  std::vector<T> A(AL.size());
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = -std::exp(AL[i]);

  // States after each processed token, in processing order: [L][E][N].
  auto hs = std::make_shared<std::vector<T>>(static_cast<std::size_t>(l) * e * n);
  Tensor<T> out({l, e});
  std::vector<T> h(static_cast<std::size_t>(e) * n, T(0));
  for (int s = 0; s < l; ++s) {
    const int t = dir == ScanDirection::kForward ? s : l - 1 - s;
    for (int k = 0; k < e; ++k) {
      const T dt = DT.at(t, k);
      const T xv = X.at(t, k);
      T y = T(0);
      for (int j = 0; j < n; ++j) {
        const std::size_t hi = static_cast<std::size_t>(k) * n + j;
        h[hi] = std::exp(dt * A[hi]) * h[hi] + dt * Bm.at(t, j) * xv;
        y += Cm.at(t, j) * h[hi];
      }
      out.at(t, k) = y + D[static_cast<std::size_t>(k)] * xv;
    }
    std::copy(h.begin(), h.end(), hs->begin() + static_cast<std::ptrdiff_t>(s) * e * n);
  }

  auto bw = [x, delta, b, c, a_log, d_skip, dir, l, e, n, hs](Graph<T>& gg, const Tensor<T>& og) {
    const auto& X = gg.value(x);
    const auto& DT = gg.value(delta);
    const auto& Bm = gg.value(b);
    const auto& Cm = gg.value(c);
    const auto& AL = gg.value(a_log);
    const auto& D = gg.value(d_skip);
    T* gx = gg.grad_buffer(x);
    T* gdt = gg.grad_buffer(delta);
    T* gb = gg.grad_buffer(b);
    T* gc = gg.grad_buffer(c);
    T* gal = gg.grad_buffer(a_log);
    T* gd = gg.grad_buffer(d_skip);
    std::vector<T> A(AL.size());
    for (std::size_t i = 0; i < A.size(); ++i) A[i] = -std::exp(AL[i]);
    std::vector<T> dA(A.size(), T(0));
    std::vector<T> dh(static_cast<std::size_t>(e) * n, T(0));
    for (int s = l - 1; s >= 0; --s) {
      const int t = dir == ScanDirection::kForward ? s : l - 1 - s;
      const T* hcur = hs->data() + static_cast<std::size_t>(s) * e * n;
      const T* hprev = s > 0 ? hs->data() + static_cast<std::size_t>(s - 1) * e * n : nullptr;
      for (int k = 0; k < e; ++k) {
        const T dy = og.at(t, k);
        const T xv = X.at(t, k);
        const T dt = DT.at(t, k);
        if (gd) gd[k] += dy * xv;
        T gxv = dy * D[static_cast<std::size_t>(k)];
        T gdtv = T(0);
        for (int j = 0; j < n; ++j) {
          const std::size_t hi = static_cast<std::size_t>(k) * n + j;
          if (gc) gc[static_cast<std::size_t>(t) * n + j] += dy * hcur[hi];
          const T dhv = dh[hi] + dy * Cm.at(t, j);
          const T decay = std::exp(dt * A[hi]);
          const T hp = hprev ? hprev[hi] : T(0);
          const T ddecay = dhv * hp;
          gdtv += ddecay * decay * A[hi] + dhv * Bm.at(t, j) * xv;
          dA[hi] += ddecay * decay * dt;
          if (gb) gb[static_cast<std::size_t>(t) * n + j] += dhv * dt * xv;
          gxv += dhv * dt * Bm.at(t, j);
          dh[hi] = dhv * decay;
        }
        if (gx) gx[static_cast<std::size_t>(t) * e + k] += gxv;
        if (gdt) gdt[static_cast<std::size_t>(t) * e + k] += gdtv;
      }
    }
    if (gal)
      for (std::size_t i = 0; i < A.size(); ++i) gal[i] += dA[i] * A[i];
  };
  return g.make(std::move(out), any_grad(g, {x, delta, b, c, a_log, d_skip}), bw);
}

template <typename T>
std::vector<T> bilinear_sample(const Tensor<T>& grid, T y, T x) {
  require(grid.rank() == 3, "bilinear_sample: expects [K,H,W]");
  const int k = grid.dim(0), h = grid.dim(1), w = grid.dim(2);
  const Tap<T> tap = make_tap<T>(h, w, y, x);
  std::vector<T> out(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    out[static_cast<std::size_t>(c)] =
        tap_value(tap, grid.data() + static_cast<std::size_t>(c) * h * w);
  return out;
}

template <typename T>
Var deform_conv2d(Graph<T>& g, Var x, Var offsets, Var w, Var b) {
  const auto& X = g.value(x);
  const auto& OFF = g.value(offsets);
  const auto& W = g.value(w);
  check(X.rank() == 3 && W.rank() == 4, "deform_conv2d: expects x [Cin,H,W], w [Cout,Cin,k,k]");
  const int cin = X.dim(0), h = X.dim(1), wd = X.dim(2);
  const int cout = W.dim(0), k = W.dim(2), kk = k * k, pad = k / 2;
  require(W.dim(1) == cin && W.dim(3) == k && k % 2 == 1, "deform_conv2d: bad weight shape");
  require(OFF.rank() == 3 && OFF.dim(0) == 2 * kk && OFF.dim(1) == h && OFF.dim(2) == wd,
          "deform_conv2d: offsets must be [2*k*k, H, W], got " + shape_str(OFF.shape()));
  const int hw = h * wd, rows = cin * kk;

  auto taps = std::make_shared<std::vector<Tap<T>>>(static_cast<std::size_t>(kk) * hw);
  for (int t = 0; t < kk; ++t) {
    const int ki = t / k, kj = t % k;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < wd; ++xx) {
        const int p = y * wd + xx;
        const T py = static_cast<T>(y + ki - pad) + OFF[static_cast<std::size_t>(2 * t) * hw + p];
        const T px = static_cast<T>(xx + kj - pad) + OFF[static_cast<std::size_t>(2 * t + 1) * hw + p];
        (*taps)[static_cast<std::size_t>(t) * hw + p] = make_tap<T>(h, wd, py, px);
      }
  }
  auto cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows) * hw);
  for (int c = 0; c < cin; ++c) {
    const T* img = X.data() + static_cast<std::size_t>(c) * hw;
    for (int t = 0; t < kk; ++t) {
      T* dst = cols->data() + static_cast<std::size_t>(c * kk + t) * hw;
      const Tap<T>* tp = taps->data() + static_cast<std::size_t>(t) * hw;
      for (int p = 0; p < hw; ++p) dst[p] = tap_value(tp[p], img);
    }
  }
  Tensor<T> out({cout, h, wd});
  MapM<T> O(out.data(), cout, hw);
  O.noalias() = CMapM<T>(W.data(), cout, rows) * CMapM<T>(cols->data(), rows, hw);
  if (b.valid()) {
    const auto& B = g.value(b);
    for (int o = 0; o < cout; ++o) O.row(o).array() += B[static_cast<std::size_t>(o)];
  }

  auto bw = [x, offsets, w, b, cin, cout, kk, hw, rows, taps, cols](Graph<T>& gg,
                                                                    const Tensor<T>& og) {
    CMapM<T> G(og.data(), cout, hw);
    if (T* gw = gg.grad_buffer(w))
      MapM<T>(gw, cout, rows).noalias() += G * CMapM<T>(cols->data(), rows, hw).transpose();
    if (b.valid())
      if (T* gb = gg.grad_buffer(b))
        for (int o = 0; o < cout; ++o) gb[o] += G.row(o).sum();
    T* gx = gg.grad_buffer(x);
    T* goff = gg.grad_buffer(offsets);
    if (!gx && !goff) return;
    const MatRM<T> dcols = CMapM<T>(gg.value(w).data(), cout, rows).transpose() * G;
    const auto& X = gg.value(x);
    for (int t = 0; t < kk; ++t) {
      const Tap<T>* tp = taps->data() + static_cast<std::size_t>(t) * hw;
      for (int p = 0; p < hw; ++p) {
        const Tap<T>& tap = tp[p];
        T gy = T(0), gxo = T(0);
        for (int c = 0; c < cin; ++c) {
          const T d = dcols(c * kk + t, p);
          if (d == T(0)) continue;
          const T* img = X.data() + static_cast<std::size_t>(c) * hw;
          if (gx) {
            T* gimg = gx + static_cast<std::size_t>(c) * hw;
            for (int i = 0; i < 4; ++i)
              if (tap.idx[i] >= 0) gimg[tap.idx[i]] += d * tap.w[i];
          }
          if (goff) {
            T v[4];
            for (int i = 0; i < 4; ++i) v[i] = tap.idx[i] >= 0 ? img[tap.idx[i]] : T(0);
            gy += d * ((T(1) - tap.lx) * (v[2] - v[0]) + tap.lx * (v[3] - v[1]));
            gxo += d * ((T(1) - tap.ly) * (v[1] - v[0]) + tap.ly * (v[3] - v[2]));
          }
        }
        if (goff) {
          goff[static_cast<std::size_t>(2 * t) * hw + p] += gy;
          goff[static_cast<std::size_t>(2 * t + 1) * hw + p] += gxo;
        }
      }
    }
  };
  return g.make(std::move(out), any_grad(g, {x, offsets, w, b}), bw);
}

template <typename T>
SegLoss<T> seg_loss(Graph<T>& g, Var probs, std::span<const std::int32_t> labels,
                    std::span<const std::uint8_t> include) {
  const auto& P = g.value(probs);
  check(P.rank() == 3, "seg_loss: expects probs [C,H,W]");
  const int c = P.dim(0);
  const std::size_t hw = static_cast<std::size_t>(P.dim(1)) * P.dim(2);
  require(labels.size() == hw, "seg_loss: label grid does not match probabilities");
  require(include.empty() || include.size() == hw, "seg_loss: include mask size mismatch");
  auto inc = [&](std::size_t p) { return include.empty() || include[p] != 0; };

  std::size_t count = 0;
  for (std::size_t p = 0; p < hw; ++p) count += inc(p) ? 1 : 0;
  SegLoss<T> res;
  if (count == 0) {
    res.loss = g.input(Tensor<T>::scalar(T(0)));
    res.empty = true;
    return res;
  }

  double ce = 0;
  const int fg = c - 1;
  std::vector<double> inter(static_cast<std::size_t>(c), 0.0), psum(inter), gsum(inter);
  for (std::size_t p = 0; p < hw; ++p) {
    if (!inc(p)) continue;
    const int lab = labels[p];
    require(lab >= 0 && lab < c, "seg_loss: label outside [0, C-1]");
    ce -= std::log(std::max(static_cast<double>(P[lab * hw + p]), kProbFloor));
    for (int k = 1; k < c; ++k) {
      const double pv = P[k * hw + p];
      psum[static_cast<std::size_t>(k)] += pv;
      if (lab == k) {
        inter[static_cast<std::size_t>(k)] += pv;
        gsum[static_cast<std::size_t>(k)] += 1.0;
      }
    }
  }
  ce /= static_cast<double>(count);
  double dice_mean = 0;
  for (int k = 1; k < c; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    dice_mean += (2.0 * inter[kk] + kDiceSmooth) / (psum[kk] + gsum[kk] + kDiceSmooth);
  }
  const double dice_loss = fg > 0 ? 1.0 - dice_mean / fg : 0.0;
  res.ce = ce;
  res.dice = dice_loss;
  const double total = 0.5 * ce + 0.5 * dice_loss;

  auto lab = std::make_shared<std::vector<std::int32_t>>(labels.begin(), labels.end());
  auto incv = std::make_shared<std::vector<std::uint8_t>>(include.begin(), include.end());
  auto bw = [probs, c, hw, count, fg, lab, incv, inter, psum, gsum](Graph<T>& gg,
                                                                   const Tensor<T>& og) {
    const auto& P = gg.value(probs);
    T* gp = gg.grad_buffer(probs);
    const double up = og[0];
    for (std::size_t p = 0; p < hw; ++p) {
      if (!incv->empty() && (*incv)[p] == 0) continue;
      const int l = (*lab)[p];
      const double pl = P[l * hw + p];
      if (pl > kProbFloor) gp[l * hw + p] += static_cast<T>(up * -0.5 / (static_cast<double>(count) * pl));
      if (fg == 0) continue;
      for (int k = 1; k < c; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double den = psum[kk] + gsum[kk] + kDiceSmooth;
        const double num = 2.0 * inter[kk] + kDiceSmooth;
        const double gt = l == k ? 1.0 : 0.0;
        const double dd = (2.0 * gt * den - num) / (den * den);
        gp[k * hw + p] += static_cast<T>(up * -0.5 * dd / fg);
      }
    }
  };
  res.loss = g.make(Tensor<T>::scalar(static_cast<T>(total)), g.requires_grad(probs), bw);
  return res;
}

template <typename T>
Var masked_kl(Graph<T>& g, Var p, Var q, std::span<const std::uint8_t> select, double normalizer,
              Student student) {
  const auto& P = g.value(p);
  const auto& Q = g.value(q);
  require(P.shape() == Q.shape() && P.rank() == 3, "masked_kl: shape mismatch");
  const int c = P.dim(0);
  const std::size_t hw = static_cast<std::size_t>(P.dim(1)) * P.dim(2);
  require(select.size() == hw, "masked_kl: selection size mismatch");
  if (normalizer == 0) return g.input(Tensor<T>::scalar(T(0)));
  double total = 0;
  for (std::size_t px = 0; px < hw; ++px) {
    if (!select[px]) continue;
    for (int k = 0; k < c; ++k) {
      const double pv = P[k * hw + px], qv = Q[k * hw + px];
      total += pv * (std::log(std::max(pv, kProbFloor)) - std::log(std::max(qv, kProbFloor)));
    }
  }
  total /= normalizer;
  const Var target = student == Student::kFirst ? p : q;
  auto sel = std::make_shared<std::vector<std::uint8_t>>(select.begin(), select.end());
  auto bw = [p, q, target, student, c, hw, normalizer, sel](Graph<T>& gg, const Tensor<T>& og) {
    const auto& P = gg.value(p);
    const auto& Q = gg.value(q);
    T* gt = gg.grad_buffer(target);
    const double up = og[0] / normalizer;
    for (std::size_t px = 0; px < hw; ++px) {
      if (!(*sel)[px]) continue;
      for (int k = 0; k < c; ++k) {
        const double pv = P[k * hw + px], qv = Q[k * hw + px];
        double d;
        if (student == Student::kFirst)
          d = std::log(std::max(pv, kProbFloor)) + (pv > kProbFloor ? 1.0 : 0.0) -
              std::log(std::max(qv, kProbFloor));
        else
          d = qv > kProbFloor ? -pv / qv : 0.0;
        gt[k * hw + px] += static_cast<T>(up * d);
      }
    }
  };
  return g.make(Tensor<T>::scalar(static_cast<T>(total)), g.requires_grad(target), bw);
}

#define HURMACL_INSTANTIATE(T)                                                                  \
  template Var add<T>(Graph<T>&, Var, Var);                                                     \
  template Var mul<T>(Graph<T>&, Var, Var);                                                     \
  template Var scale<T>(Graph<T>&, Var, T);                                                     \
  template Var leaky_relu<T>(Graph<T>&, Var, T);                                                \
  template Var silu<T>(Graph<T>&, Var);                                                         \
  template Var softplus<T>(Graph<T>&, Var);                                                     \
  template Var conv2d<T>(Graph<T>&, Var, Var, Var, int);                                        \
  template Var conv_transpose2x2<T>(Graph<T>&, Var, Var, Var);                                  \
  template Var instance_norm<T>(Graph<T>&, Var, Var, Var, T);                                   \
  template Var max_pool2<T>(Graph<T>&, Var);                                                    \
  template Var concat_channels<T>(Graph<T>&, Var, Var);                                         \
  template Var softmax_channels<T>(Graph<T>&, Var);                                             \
  template Var apply_mask<T>(Graph<T>&, Var, std::span<const std::uint8_t>);                    \
  template Var linear<T>(Graph<T>&, Var, Var, Var);                                             \
  template Var layer_norm<T>(Graph<T>&, Var, Var, Var, T);                                      \
  template Var patchify<T>(Graph<T>&, Var, int, int);                                           \
  template Var unpatchify<T>(Graph<T>&, Var, int, int, int, int, int);                          \
  template Var selective_scan_core<T>(Graph<T>&, Var, Var, Var, Var, Var, Var, ScanDirection);  \
  template Var deform_conv2d<T>(Graph<T>&, Var, Var, Var, Var);                                 \
  template std::vector<T> bilinear_sample<T>(const Tensor<T>&, T, T);                           \
  template SegLoss<T> seg_loss<T>(Graph<T>&, Var, std::span<const std::int32_t>,                \
                                  std::span<const std::uint8_t>);                               \
  template Var masked_kl<T>(Graph<T>&, Var, Var, std::span<const std::uint8_t>, double, Student);

HURMACL_INSTANTIATE(float)
HURMACL_INSTANTIATE(double)

}  // namespace hurmacl::ops
