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

#include "hurmacl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "hurmacl/ops.hpp"

namespace hurmacl {

DscResult dsc(const LabelGrid& pred, const LabelGrid& gt, int category) {
  require(pred.shape == gt.shape, "dsc: shape mismatch " + to_string(pred.shape) + " vs " +
                                      to_string(gt.shape));
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const bool p = pred.labels[i] == category, q = gt.labels[i] == category;
    a += p;
    b += q;
    both += p && q;
  }
  if (a + b == 0) return {1.0, true};
  return {2.0 * static_cast<double>(both) / static_cast<double>(a + b), false};
}

std::vector<std::size_t> boundary_voxels(const LabelGrid& grid, int category) {
  const int d = grid.shape.depth, h = grid.shape.height, w = grid.shape.width;
  auto in = [&](int z, int y, int x) {
    if (z < 0 || z >= d || y < 0 || y >= h || x < 0 || x >= w) return false;
    return grid.labels[(static_cast<std::size_t>(z) * h + y) * w + x] == category;
  };
  std::vector<std::size_t> out;
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!in(z, y, x)) continue;
        bool edge = !in(z, y - 1, x) || !in(z, y + 1, x) || !in(z, y, x - 1) || !in(z, y, x + 1);
        if (d > 1) edge = edge || !in(z - 1, y, x) || !in(z + 1, y, x);
        if (edge) out.push_back((static_cast<std::size_t>(z) * h + y) * w + x);
      }
  return out;
}

namespace {

struct Point {
  double z, y, x;
};

std::vector<Point> physical(const std::vector<std::size_t>& idx, const GridShape& s,
                            const Spacing& sp) {
  std::vector<Point> out;
  out.reserve(idx.size());
  const std::size_t plane = s.slice_numel();
  for (std::size_t i : idx) {
    const auto z = static_cast<double>(i / plane);
    const auto r = i % plane;
    out.push_back({z * sp.z, static_cast<double>(r / s.width) * sp.y,
                   static_cast<double>(r % s.width) * sp.x});
  }
  return out;
}

double directed_mean(const std::vector<Point>& from, const std::vector<Point>& to) {
  double sum = 0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      const double dz = p.z - q.z, dy = p.y - q.y, dx = p.x - q.x;
      best = std::min(best, dz * dz + dy * dy + dx * dx);
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

AssdResult assd(const LabelGrid& pred, const LabelGrid& gt, int category, const Spacing& spacing) {
  require(pred.shape == gt.shape, "assd: shape mismatch " + to_string(pred.shape) + " vs " +
                                       to_string(gt.shape));
  require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0, "assd: spacing must be positive");
  const auto a = physical(boundary_voxels(pred, category), pred.shape, spacing);
  const auto b = physical(boundary_voxels(gt, category), gt.shape, spacing);
  if (a.empty() || b.empty()) return {0.0, true};
  return {0.5 * (directed_mean(a, b) + directed_mean(b, a)), false};
}

MetricReport evaluate_case(const LabelGrid& pred, const LabelGrid& gt, const std::string& id) {
  MetricReport r;
  r.case_id = id;
  double dsum = 0, asum = 0;
  for (int c = 1; c < gt.num_categories; ++c) {
    CategoryMetrics m;
    m.category = c;
    m.dsc = dsc(pred, gt, c);
    m.assd = assd(pred, gt, c, gt.spacing);
    dsum += m.dsc.value;
    if (!m.assd.undefined) {
      asum += m.assd.value;
      ++r.assd_defined;
    }
    r.categories.push_back(m);
  }
  r.mean_dsc = r.categories.empty() ? 0.0 : 100.0 * dsum / static_cast<double>(r.categories.size());
  r.mean_assd = r.assd_defined ? asum / r.assd_defined : 0.0;
  return r;
}

namespace {

// Inference only reads parameter values; the graph never writes back.
ParameterStore<float>& readonly(const Checkpoint& c) {
  return const_cast<ParameterStore<float>&>(c.params);
}

void check_slice(const Checkpoint& c, const IntensityGrid& s) {
  if (s.shape.height != c.height || s.shape.width != c.width)
    fail(ErrorCode::kInvalidArgument, "image slice is " + std::to_string(s.shape.height) + "x" +
                                          std::to_string(s.shape.width) + ", model expects " +
                                          std::to_string(c.height) + "x" + std::to_string(c.width));
}

}  // namespace

LabelGrid predict_labels(const Checkpoint& c, const IntensityGrid& image) {
  LabelGrid out;
  out.shape = image.shape;
  out.spacing = image.spacing;
  out.num_categories = c.model.unet.num_categories;
  out.labels.resize(image.shape.numel());
  const int C = out.num_categories;
  const std::size_t plane = image.shape.slice_numel();
  for (int z = 0; z < image.shape.depth; ++z) {
    const IntensityGrid s = image.slice(z);
    check_slice(c, s);
    Graph<float> g;
    auto fw = unet_forward(g, g.input(image_tensor<float>(s)), readonly(c), c.model.unet);
    const Tensor<float>& logits = g.value(fw.final_logits);
    for (std::size_t p = 0; p < plane; ++p) {
      int best = 0;
      for (int k = 1; k < C; ++k)
        if (logits[k * plane + p] > logits[best * plane + p]) best = k;
      out.labels[z * plane + p] = best;
    }
  }
  return out;
}

std::vector<UncertaintyMap> level_uncertainty(const Checkpoint& c, const IntensityGrid& slice) {
  require(slice.shape.depth == 1, "level_uncertainty: expects a single slice");
  check_slice(c, slice);
  Graph<float> g;
  auto fw = unet_forward(g, g.input(image_tensor<float>(slice)), readonly(c), c.model.unet);
  std::vector<UncertaintyMap> out;
  for (int i = 0; i < c.model.num_levels(); ++i)
    out.push_back(uncertainty_map(g.value(level_head(g, fw, i, readonly(c), c.model.unet))));
  return out;
}

namespace {

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += workers) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<MetricReport> evaluate(const Checkpoint& c, const std::vector<Sample>& data, int jobs) {
  std::vector<MetricReport> out(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const auto& s = data[i];
    if (s.labels.num_categories != c.model.unet.num_categories)
      fail(ErrorCode::kInvalidArgument, "evaluate: case " + s.id + " has " +
                                            std::to_string(s.labels.num_categories) +
                                            " categories, model expects " +
                                            std::to_string(c.model.unet.num_categories));
    out[i] = evaluate_case(predict_labels(c, s.image), s.labels, s.id);
  });
  return out;
}

double mean_category_dsc(const std::vector<MetricReport>& reports, int category) {
  if (reports.empty()) return 0.0;
  double s = 0;
  for (const auto& r : reports)
    for (const auto& m : r.categories)
      if (m.category == category) s += m.dsc.value;
  return 100.0 * s / static_cast<double>(reports.size());
}

double mean_dsc(const std::vector<MetricReport>& reports) {
  if (reports.empty()) return 0.0;
  double s = 0;
  for (const auto& r : reports) s += r.mean_dsc;
  return s / static_cast<double>(reports.size());
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Summary {
  std::vector<double> dsc, assd;
  std::vector<int> assd_n;
  double mean_dsc = 0, mean_assd = 0;
  int mean_assd_n = 0;
};

Summary summarize(const std::vector<MetricReport>& reports, int C) {
  Summary s;
  s.dsc.assign(static_cast<std::size_t>(C), 0.0);
  s.assd.assign(static_cast<std::size_t>(C), 0.0);
  s.assd_n.assign(static_cast<std::size_t>(C), 0);
  for (const auto& r : reports) {
    for (const auto& m : r.categories) {
      s.dsc[m.category] += 100.0 * m.dsc.value;
      if (!m.assd.undefined) {
        s.assd[m.category] += m.assd.value;
        ++s.assd_n[m.category];
      }
    }
    s.mean_dsc += r.mean_dsc;
    if (r.assd_defined) {
      s.mean_assd += r.mean_assd;
      ++s.mean_assd_n;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(reports.size(), 1));
  for (int c = 1; c < C; ++c) {
    s.dsc[c] /= n;
    if (s.assd_n[c]) s.assd[c] /= s.assd_n[c];
  }
  s.mean_dsc /= n;
  if (s.mean_assd_n) s.mean_assd /= s.mean_assd_n;
  return s;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricReport>& reports, int C) {
  std::string out = "case";
  for (int c = 1; c < C; ++c) out += ",dsc_" + std::to_string(c);
  for (int c = 1; c < C; ++c) out += ",assd_" + std::to_string(c);
  out += ",mean_dsc,mean_assd\n";
  for (const auto& r : reports) {
    out += r.case_id;
    for (const auto& m : r.categories) out += "," + fixed(100.0 * m.dsc.value);
    for (const auto& m : r.categories) out += "," + (m.assd.undefined ? "NA" : fixed(m.assd.value));
    out += "," + fixed(r.mean_dsc) + "," + (r.assd_defined ? fixed(r.mean_assd) : "NA") + "\n";
  }
  const Summary s = summarize(reports, C);
  out += "mean";
  for (int c = 1; c < C; ++c) out += "," + fixed(s.dsc[c]);
  for (int c = 1; c < C; ++c) out += "," + (s.assd_n[c] ? fixed(s.assd[c]) : "NA");
  out += "," + fixed(s.mean_dsc) + "," + (s.mean_assd_n ? fixed(s.mean_assd) : "NA") + "\n";
  return out;
}

std::string metrics_table(const std::vector<MetricReport>& reports, int C) {
  const Summary s = summarize(reports, C);
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %12s %8s\n", "category", "DSC (%)", "ASSD (mm)", "cases");
  out += buf;
  for (int c = 1; c < C; ++c) {
    const std::string a = s.assd_n[c] ? fixed(s.assd[c], 3) : "undefined";
    std::snprintf(buf, sizeof buf, "%-10d %10s %12s %8zu\n", c, fixed(s.dsc[c], 2).c_str(), a.c_str(),
                  reports.size());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-10s %10s %12s %8zu\n", "mean", fixed(s.mean_dsc, 2).c_str(),
                s.mean_assd_n ? fixed(s.mean_assd, 3).c_str() : "undefined", reports.size());
  out += buf;
  return out;
}

const char* to_string(SweepMode m) { return m == SweepMode::kRetrain ? "retrain" : "inference"; }

std::vector<SweepRow> threshold_sweep(const Checkpoint& c, const std::vector<Sample>& train_data,
                                      const std::vector<Sample>& eval_data,
                                      const std::vector<double>& thresholds,
                                      const SweepOptions& opts) {
  require(!eval_data.empty(), "threshold_sweep: evaluation set is empty");
  for (double t : thresholds)
    if (!(t >= 0)) fail(ErrorCode::kConfig, "threshold_sweep: thresholds must be >= 0");

  // Uncertainty maps of the given checkpoint, one list per slice.
  const auto levels = c.train.active_levels(c.model);
  std::vector<std::vector<UncertaintyMap>> maps;
  for (const auto& s : eval_data)
    for (int z = 0; z < s.image.shape.depth; ++z) maps.push_back(level_uncertainty(c, s.image.slice(z)));

  double fixed_dsc = 0;
  if (opts.mode == SweepMode::kInference) fixed_dsc = mean_dsc(evaluate(c, eval_data, opts.jobs));

  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    if (opts.on_threshold) opts.on_threshold(t);
    SweepRow row;
    row.threshold = t;
    std::size_t hard = 0, total = 0;
    for (const auto& per_slice : maps)
      for (int i : levels) {
        hard += binarize(per_slice[static_cast<std::size_t>(i)], t).count();
        total += per_slice[static_cast<std::size_t>(i)].values.size();
      }
    row.hard_fraction = total ? static_cast<double>(hard) / static_cast<double>(total) : 0.0;
    if (opts.mode == SweepMode::kInference) {
      row.mean_dsc = fixed_dsc;
    } else {
      require(!train_data.empty(), "threshold_sweep: retrain mode needs training data");
      TrainConfig tc = c.train;
      tc.threshold = t;
      Checkpoint fresh = init_checkpoint(c.model, tc, TrainMode::kFull, c.height, c.width);
      train(fresh, train_data);
      row.mean_dsc = mean_dsc(evaluate(fresh, eval_data, opts.jobs));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepMode mode) {
  std::string out = "threshold,mean_dsc,hard_fraction,mode\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.6f,%s\n", r.threshold, r.mean_dsc, r.hard_fraction,
                  to_string(mode));
    out += buf;
  }
  return out;
}

}  // namespace hurmacl
