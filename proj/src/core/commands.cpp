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

#include "hurmacl/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hurmacl/metrics.hpp"
#include "hurmacl/nifti.hpp"
#include "hurmacl/png_io.hpp"
#include "hurmacl/rng.hpp"

namespace hurmacl {

namespace fs = std::filesystem;

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::kIo, "cannot write " + path);
    f << text;
    if (!f) fail(ErrorCode::kIo, "write failed for " + path);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot rename into " + path + ": " + ec.message());
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory " + dir + ": " + ec.message());
}

void ensure_parent(const std::string& file) {
  const auto parent = fs::path(file).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

std::string stem_of(const fs::path& p) {
  std::string s = p.filename().string();
  for (const char* ext : {".nii.gz", ".nii"})
    if (s.ends_with(ext)) return s.substr(0, s.size() - std::string(ext).size());
  return s;
}

bool is_image(const fs::path& p) {
  const std::string s = p.filename().string();
  if (!(s.ends_with(".nii") || s.ends_with(".nii.gz"))) return false;
  return !stem_of(p).ends_with("_label");
}

Sample load_case(const fs::path& image, const RunConfig& cfg, bool need_labels) {
  Sample s;
  s.id = stem_of(image);
  s.image = read_intensity(image);
  if (cfg.data.normalize) {
    s.image = normalize_intensity(s.image, cfg.data.window_lo, cfg.data.window_hi);
  }
  const fs::path lab = label_companion(image);
  if (fs::exists(lab)) {
    s.labels = read_labels(lab, cfg.data.categories);
    if (!(s.labels.shape == s.image.shape))
      fail(ErrorCode::kInvalidArgument, "labels of " + s.id + " have shape " +
                                            to_string(s.labels.shape) + ", image has " +
                                            to_string(s.image.shape));
    s.labels.spacing = s.image.spacing;
  } else if (need_labels) {
    fail(ErrorCode::kInvalidArgument, "case " + s.id + " has no label companion " + lab.string());
  } else {
    s.labels.shape = s.image.shape;
    s.labels.spacing = s.image.spacing;
    s.labels.num_categories = cfg.data.categories;
    s.labels.labels.assign(s.image.shape.numel(), 0);
  }
  return s;
}

std::vector<Sample> load_cases(const std::string& dir, const RunConfig& cfg, bool need_labels) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kInvalidArgument, "dataset directory not found: " + dir);
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image(e.path())) images.push_back(e.path());
  std::sort(images.begin(), images.end());
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "no .nii/.nii.gz images in " + dir);
  std::vector<Sample> out;
  for (const auto& p : images) out.push_back(load_case(p, cfg, need_labels));
  return out;
}

std::vector<Sample> input_cases(const RunConfig& cfg) {
  if (!cfg.paths.input.empty()) return {load_case(cfg.paths.input, cfg, false)};
  return load_cases(cfg.paths.data, cfg, false);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string history_csv(const std::vector<StepLog>& h) {
  std::string out = step_log_header() + "\n";
  for (const auto& s : h) out += step_log_row(s) + "\n";
  return out;
}

IntensityGrid as_grid(const UncertaintyMap& u, const Spacing& spacing) {
  IntensityGrid g;
  g.shape = {1, u.height, u.width};
  g.spacing = spacing;
  g.values.assign(u.values.begin(), u.values.end());
  return g;
}

}  // namespace

std::vector<Sample> load_dataset(const std::string& dir, const RunConfig& cfg) {
  return load_cases(dir, cfg, true);
}

std::vector<Sample> to_slices(const std::vector<Sample>& volumes) {
  std::vector<Sample> out;
  for (const auto& v : volumes) {
    if (v.image.shape.depth == 1) {
      out.push_back(v);
      continue;
    }
    for (int z = 0; z < v.image.shape.depth; ++z)
      out.push_back({v.image.slice(z), v.labels.slice(z), v.id + "_z" + std::to_string(z)});
  }
  return out;
}

void cmd_generate_data(const RunConfig& cfg, const Reporter& report) {
  if (cfg.data.count < 1) fail(ErrorCode::kConfig, "data.count must be >= 1");
  const PhantomSpec spec = cfg.phantom_spec();
  spec.validate();
  ensure_dir(cfg.paths.out);
  for (int i = 0; i < cfg.data.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case_%03d", i);
    const Sample s = generate_phantom(spec, derive_seed(cfg.seed, "phantom" + std::to_string(i)));
    save_volume(s.image, fs::path(cfg.paths.out) / (std::string(id) + ".nii.gz"));
    save_volume(s.labels, fs::path(cfg.paths.out) / (std::string(id) + "_label.nii.gz"));
  }
  report("wrote " + std::to_string(cfg.data.count) + " phantom pairs (" +
         std::to_string(spec.height) + "x" + std::to_string(spec.width) + ", C=" +
         std::to_string(spec.num_categories) + ") to " + cfg.paths.out);
}

void cmd_train(const RunConfig& cfg, const Reporter& report) {
  const auto data = to_slices(load_dataset(cfg.paths.data, cfg));
  Checkpoint ckpt;
  if (!cfg.run.resume.empty()) {
    ckpt = load_checkpoint(cfg.run.resume);
    report("resuming " + cfg.run.resume + " at step " + std::to_string(ckpt.step));
  } else {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    ModelConfig mc = cfg.model;
    mc.unet.num_categories = cfg.data.categories;
    ckpt = init_checkpoint(mc, tc, TrainMode::kFull, data.front().image.shape.height,
                           data.front().image.shape.width);
  }
  const int spe = steps_per_epoch(data.size(), ckpt.train.batch_size);
  const std::int64_t last = static_cast<std::int64_t>(spe) * ckpt.train.epochs;
  const std::int64_t stop = cfg.run.max_steps < 0 ? last : std::min(last, cfg.run.max_steps);
  report("training on " + std::to_string(data.size()) + " slices, " + std::to_string(spe) +
         " steps/epoch, " + std::to_string(ckpt.params.numel()) + " parameters");

  const std::string ckpt_path = cfg.checkpoint_path();
  ensure_parent(ckpt_path);
  ensure_parent(cfg.log_path());
  TrainOptions opts;
  opts.on_step = [&](const StepLog& s) {
    if (s.step % spe != 0) return;
    report("epoch " + std::to_string(s.epoch + 1) + "/" + std::to_string(ckpt.train.epochs) +
           "  total " + fixed(s.total, 5) + "  loss_1 " + fixed(s.loss1, 5) + "  hard " +
           std::to_string(s.hard));
  };
  bool saved = false;
  while (ckpt.step < stop) {
    std::int64_t target = stop;
    if (cfg.run.checkpoint_every > 0)
      target = std::min(stop, (ckpt.step / spe + cfg.run.checkpoint_every) * spe);
    opts.max_steps = target;
    train(ckpt, data, opts);
    save_checkpoint(ckpt, ckpt_path);
    saved = true;
  }
  if (!saved) save_checkpoint(ckpt, ckpt_path);
  write_text_atomic(cfg.log_path(), history_csv(ckpt.history));
  report("checkpoint " + ckpt_path + ", log " + cfg.log_path());
}

void cmd_evaluate(const RunConfig& cfg, const Reporter& report) {
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  RunConfig c = cfg;
  c.data.categories = ckpt.model.unet.num_categories;
  const auto data = load_dataset(cfg.paths.data, c);
  const auto reports = evaluate(ckpt, data, cfg.run.jobs);
  ensure_dir(cfg.paths.out);
  const std::string path = cfg.paths.out + "/metrics.csv";
  write_text_atomic(path, metrics_csv(reports, ckpt.model.unet.num_categories));
  report(metrics_table(reports, ckpt.model.unet.num_categories) + "metrics " + path);
}

void cmd_predict(const RunConfig& cfg, const Reporter& report) {
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  RunConfig c = cfg;
  c.data.categories = ckpt.model.unet.num_categories;
  const auto cases = input_cases(c);
  ensure_dir(cfg.paths.out);
  for (const auto& s : cases) {
    const LabelGrid pred = predict_labels(ckpt, s.image);
    save_volume(pred, fs::path(cfg.paths.out) / (s.id + "_pred.nii.gz"));
    const int z = s.image.shape.depth / 2;
    write_png_rgb(overlay(s.image.slice(z), pred.slice(z)), cfg.paths.out + "/" + s.id + "_overlay.png");
  }
  report("predicted " + std::to_string(cases.size()) + " case(s) into " + cfg.paths.out);
}

void cmd_sweep_threshold(const RunConfig& cfg, const Reporter& report) {
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  RunConfig c = cfg;
  c.data.categories = ckpt.model.unet.num_categories;
  const auto train_data = to_slices(load_dataset(cfg.paths.data, c));
  const auto eval_data =
      cfg.paths.val_data.empty() ? train_data : to_slices(load_dataset(cfg.paths.val_data, c));
  SweepOptions opts;
  opts.mode = cfg.run.sweep_mode;
  opts.jobs = cfg.run.jobs;
  opts.on_threshold = [&](double t) {
    report(std::string(opts.mode == SweepMode::kRetrain ? "retraining" : "evaluating") +
           " at T=" + fixed(t, 6));
  };
  const auto rows = threshold_sweep(ckpt, train_data, eval_data, cfg.run.thresholds, opts);
  ensure_dir(cfg.paths.out);
  write_text_atomic(cfg.paths.out + "/sweep.csv", sweep_csv(rows, opts.mode));
  write_png_rgb(sweep_plot(rows), cfg.paths.out + "/sweep.png");
  std::string table = "T          DSC (%)   hard fraction  [" + std::string(to_string(opts.mode)) + "]\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-10g %8.2f %14.4f\n", r.threshold, r.mean_dsc, r.hard_fraction);
    table += buf;
  }
  report(table + "sweep " + cfg.paths.out + "/sweep.csv");
}

void cmd_export_uncertainty(const RunConfig& cfg, const Reporter& report) {
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  RunConfig c = cfg;
  c.data.categories = ckpt.model.unet.num_categories;
  const auto cases = input_cases(c);
  ensure_dir(cfg.paths.out);
  for (const auto& s : cases) {
    const int z = s.image.shape.depth / 2;
    const auto maps = level_uncertainty(ckpt, s.image.slice(z));
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const std::string base = cfg.paths.out + "/" + s.id + "_uncertainty_l" + std::to_string(i);
      const double f = static_cast<double>(ckpt.height) / maps[i].height;
      Spacing sp = s.image.spacing;
      sp.y *= f;
      sp.x *= f;
      save_volume(as_grid(maps[i], sp), base + ".nii.gz");
      write_png_gray(heatmap(maps[i]), maps[i].height, maps[i].width, base + ".png");
    }
  }
  report("exported uncertainty maps for " + std::to_string(cases.size()) + " case(s) into " +
         cfg.paths.out);
}

}  // namespace hurmacl
