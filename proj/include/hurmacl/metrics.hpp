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

#include <cstdint>
#include <string>
#include <vector>

#include "hurmacl/core_data.hpp"
#include "hurmacl/hurm.hpp"
#include "hurmacl/trainer.hpp"

namespace hurmacl {

struct DscResult {
  double value = 0;  // in [0, 1]
  bool both_empty = false;  // value is 1 by definition
};

// 2|A n B| / (|A| + |B|) for one category.
DscResult dsc(const LabelGrid& pred, const LabelGrid& gt, int category);

struct AssdResult {
  double value = 0;  // millimetres
  bool undefined = false;  // one of the surfaces is empty
};

// Object voxels with a face neighbour outside the object (4-neighbourhood in
// plane, plus z neighbours when depth > 1). Out-of-grid counts as outside.
// Returned as flat indices in raster order.
std::vector<std::size_t> boundary_voxels(const LabelGrid& grid, int category);

// Mean of the two directed average surface distances, scaled by spacing.
AssdResult assd(const LabelGrid& pred, const LabelGrid& gt, int category, const Spacing& spacing);

struct CategoryMetrics {
  int category = 0;
  DscResult dsc;
  AssdResult assd;
};

struct MetricReport {
  std::string case_id;
  std::vector<CategoryMetrics> categories;  // foreground categories 1..C-1
  double mean_dsc = 0;   // percent, over all foreground categories
  double mean_assd = 0;  // mm, over categories with a defined ASSD
  int assd_defined = 0;
};

MetricReport evaluate_case(const LabelGrid& pred, const LabelGrid& gt, const std::string& id);

// Backbone prediction (argmax of the final softmax), slice by slice.
LabelGrid predict_labels(const Checkpoint& ckpt, const IntensityGrid& image);

// Normalized entropy of every decoder level's probabilities, coarse -> fine,
// for a single slice.
std::vector<UncertaintyMap> level_uncertainty(const Checkpoint& ckpt, const IntensityGrid& slice);

// Per-case reports in dataset order; jobs bounds the worker threads.
std::vector<MetricReport> evaluate(const Checkpoint& ckpt, const std::vector<Sample>& data,
                                   int jobs = 1);

// Mean DSC (percent) of one category across reports.
double mean_category_dsc(const std::vector<MetricReport>& reports, int category);
// Mean over reports of the per-case macro DSC.
double mean_dsc(const std::vector<MetricReport>& reports);

// One row per case plus a trailing "mean" row; fixed precision, NA for
// undefined ASSD.
std::string metrics_csv(const std::vector<MetricReport>& reports, int num_categories);
std::string metrics_table(const std::vector<MetricReport>& reports, int num_categories);

enum class SweepMode { kRetrain, kInference };
const char* to_string(SweepMode m);

struct SweepRow {
  double threshold = 0;
  double mean_dsc = 0;       // percent
  double hard_fraction = 0;  // retained pixels / all pixels, over active levels
};

struct SweepOptions {
  SweepMode mode = SweepMode::kRetrain;
  int jobs = 1;
  std::function<void(double threshold)> on_threshold;
};

// Hard fractions are measured on the given checkpoint's uncertainty maps for
// every T, so they are non-increasing in T. DSC comes from a model retrained
// with that T from the checkpoint's config and seed (kRetrain), or from the
// checkpoint itself (kInference, where T does not change the prediction).
std::vector<SweepRow> threshold_sweep(const Checkpoint& ckpt, const std::vector<Sample>& train_data,
                                      const std::vector<Sample>& eval_data,
                                      const std::vector<double>& thresholds,
                                      const SweepOptions& opts = {});

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepMode mode);

}  // namespace hurmacl
