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

#include "hurmacl/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "toml.hpp"

namespace hurmacl {

PhantomSpec RunConfig::phantom_spec() const {
  PhantomSpec s = PhantomSpec::standard(data.size, data.categories);
  s.noise_sigma = data.noise_sigma;
  s.jitter = data.jitter;
  s.background = data.background;
  return s;
}

std::string RunConfig::checkpoint_path() const {
  return paths.checkpoint.empty() ? paths.out + "/model.ckpt" : paths.checkpoint;
}

std::string RunConfig::log_path() const {
  return paths.log.empty() ? paths.out + "/train_log.csv" : paths.log;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorCode::kConfig, "config key '" + key + "': " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const std::string t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) bad(key, "expected an integer, got '" + v + "'");
  return out;
}

int parse_i32(const std::string& key, const std::string& v) {
  const auto x = parse_int(key, v);
  if (x < -2147483647LL || x > 2147483647LL) bad(key, "integer out of range");
  return static_cast<int>(x);
}

double parse_float(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(x))
    bad(key, "expected a number, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string t = trim(v);
  if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_float(key, item));
  return out;
}

std::string fmt(double v) {
  // Shortest text that reads back to the same double.
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

struct Binding {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;  // TOML literal
};

#define HM_INT(NAME, FIELD, DOC)                                                          \
  Binding{{NAME, "int", DOC},                                                             \
          [](RunConfig& c, const std::string& v) { c.FIELD = parse_i32(NAME, v); },       \
          [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define HM_FLOAT(NAME, FIELD, DOC)                                                        \
  Binding{{NAME, "float", DOC},                                                           \
          [](RunConfig& c, const std::string& v) { c.FIELD = parse_float(NAME, v); },     \
          [](const RunConfig& c) { return fmt(c.FIELD); }}
#define HM_BOOL(NAME, FIELD, DOC)                                                         \
  Binding{{NAME, "bool", DOC},                                                            \
          [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); },      \
          [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}
#define HM_STRING(NAME, FIELD, DOC)                                                       \
  Binding{{NAME, "string", DOC}, [](RunConfig& c, const std::string& v) { c.FIELD = v; }, \
          [](const RunConfig& c) { return quote(c.FIELD); }}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b = {
      HM_STRING("command", command, "subcommand to run when none is given on the command line"),
      Binding{{"seed", "int", "master seed for data, initialisation and sample order"},
              [](RunConfig& c, const std::string& v) {
                const auto s = parse_int("seed", v);
                if (s < 0) bad("seed", "must be >= 0");
                c.seed = c.train.seed = static_cast<std::uint64_t>(s);
              },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
      HM_STRING("paths.data", paths.data, "dataset directory of <id>.nii.gz + <id>_label.nii.gz pairs"),
      HM_STRING("paths.val_data", paths.val_data, "evaluation set for sweep-threshold (empty: paths.data)"),
      HM_STRING("paths.out", paths.out, "output directory"),
      HM_STRING("paths.checkpoint", paths.checkpoint, "checkpoint file (empty: <out>/model.ckpt)"),
      HM_STRING("paths.log", paths.log, "per-step training CSV (empty: <out>/train_log.csv)"),
      HM_STRING("paths.input", paths.input, "single image for predict/export-uncertainty (empty: paths.data)"),
      HM_INT("data.count", data.count, "phantoms written by generate-data"),
      HM_INT("data.size", data.size, "phantom height and width in pixels"),
      HM_INT("data.categories", data.categories, "number of categories C including background (4 or 5 for phantoms)"),
      HM_FLOAT("data.noise_sigma", data.noise_sigma, "phantom Gaussian noise"),
      HM_FLOAT("data.jitter", data.jitter, "phantom placement jitter, fraction of image size"),
      HM_FLOAT("data.background", data.background, "phantom background intensity"),
      HM_BOOL("data.normalize", data.normalize, "window raw Hounsfield units on load"),
      HM_FLOAT("data.window_lo", data.window_lo, "intensity window lower bound (HU)"),
      HM_FLOAT("data.window_hi", data.window_hi, "intensity window upper bound (HU)"),
      HM_INT("model.depth", model.unet.depth, "U-Net resolution levels"),
      HM_INT("model.base_channels", model.unet.base_channels, "U-Net channels at the finest level"),
      HM_INT("model.vim_patch", model.vim.patch_h, "ViM patch size (square)"),
      HM_INT("model.vim_embed_dim", model.vim.embed_dim, "ViM token width"),
      HM_INT("model.vim_state_dim", model.vim.state_dim, "ViM state size"),
      HM_INT("model.vim_blocks", model.vim.blocks, "ViM blocks"),
      HM_INT("model.dcnn_layers", model.dcnn.layers, "deformable layers"),
      HM_INT("model.dcnn_width", model.dcnn.width, "deformable layer channels"),
      HM_FLOAT("train.alpha", train.alpha, "weight of the branch losses"),
      HM_FLOAT("train.beta", train.beta, "weight of the distillation loss"),
      HM_FLOAT("train.threshold", train.threshold, "uncertainty threshold T"),
      HM_FLOAT("train.lr", train.lr, "initial learning rate"),
      HM_FLOAT("train.momentum", train.momentum, "Nesterov momentum"),
      HM_INT("train.epochs", train.epochs, "training epochs"),
      HM_INT("train.batch_size", train.batch_size, "samples per optimizer step"),
      Binding{{"train.levels", "string", "decoder levels feeding mining and branches: all | finest"},
              [](RunConfig& c, const std::string& v) {
                if (v == "all") {
                  c.train.levels = LevelSelection::kAll;
                } else if (v == "finest") {
                  c.train.levels = LevelSelection::kFinest;
                } else {
                  bad("train.levels", "expected all or finest, got '" + v + "'");
                }
              },
              [](const RunConfig& c) {
                return quote(c.train.levels == LevelSelection::kAll ? "all" : "finest");
              }},
      HM_BOOL("train.level_loss1", train.level_loss1, "add segmentation loss at coarser decoder levels"),
      Binding{{"train.max_steps", "int", "stop after this many optimizer steps (-1: run all epochs)"},
              [](RunConfig& c, const std::string& v) { c.run.max_steps = parse_int("train.max_steps", v); },
              [](const RunConfig& c) { return std::to_string(c.run.max_steps); }},
      HM_STRING("train.resume", run.resume, "checkpoint to continue from (empty: fresh start)"),
      HM_INT("train.checkpoint_every", run.checkpoint_every, "save a checkpoint every N epochs (0: end only)"),
      Binding{{"sweep.thresholds", "float-list", "thresholds evaluated by sweep-threshold"},
              [](RunConfig& c, const std::string& v) { c.run.thresholds = parse_list("sweep.thresholds", v); },
              [](const RunConfig& c) {
                std::string s = "[";
                for (std::size_t i = 0; i < c.run.thresholds.size(); ++i)
                  s += (i ? ", " : "") + fmt(c.run.thresholds[i]);
                return s + "]";
              }},
      Binding{{"sweep.mode", "string", "retrain (train one model per T) | inference (re-threshold one model)"},
              [](RunConfig& c, const std::string& v) {
                if (v == "retrain") {
                  c.run.sweep_mode = SweepMode::kRetrain;
                } else if (v == "inference") {
                  c.run.sweep_mode = SweepMode::kInference;
                } else {
                  bad("sweep.mode", "expected retrain or inference, got '" + v + "'");
                }
              },
              [](const RunConfig& c) { return quote(to_string(c.run.sweep_mode)); }},
      HM_INT("runtime.jobs", run.jobs, "evaluation worker threads"),
  };
  return b;
}

#undef HM_INT
#undef HM_FLOAT
#undef HM_BOOL
#undef HM_STRING

const Binding& binding(const std::string& key) {
  for (const auto& b : bindings())
    if (b.key.name == key) return b;
  fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

std::string node_text(const std::string& key, const toml::node& n) {
  if (auto s = n.as_string()) return s->get();
  if (auto i = n.as_integer()) return std::to_string(i->get());
  if (auto f = n.as_floating_point()) return fmt(f->get());
  if (auto b = n.as_boolean()) return b->get() ? "true" : "false";
  if (auto a = n.as_array()) {
    std::string out;
    for (const auto& e : *a) {
      if (!e.is_number()) bad(key, "array elements must be numbers");
      out += (out.empty() ? "" : ",") + node_text(key, e);
    }
    return out;
  }
  bad(key, "unsupported value type");
}

void check_type(const Binding& b, const toml::node& n) {
  const std::string& t = b.key.type;
  const bool ok = (t == "int" && n.is_integer()) || (t == "float" && n.is_number()) ||
                  (t == "bool" && n.is_boolean()) || (t == "string" && n.is_string()) ||
                  (t == "float-list" && n.is_array());
  if (!ok) bad(b.key.name, "expected " + t);
}

void apply_table(RunConfig& cfg, const toml::table& t, const std::string& prefix) {
  for (const auto& [k, v] : t) {
    const std::string key = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (const auto* sub = v.as_table()) {
      apply_table(cfg, *sub, key);
      continue;
    }
    check_type(binding(key), v);
    set_config_value(cfg, key, node_text(key, v));
  }
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  binding(key).set(cfg, value);
  if (key == "model.vim_patch") cfg.model.vim.patch_w = cfg.model.vim.patch_h;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& b : bindings()) out.push_back(b.key);
    return out;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  toml::table t;
  try {
    t = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    fail(ErrorCode::kConfig, msg.str());
  }
  apply_table(cfg, t, "");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  return binding(key).get(cfg);
}

std::string dump_config(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& b : bindings()) {
    const auto dot = b.key.name.find('.');
    const std::string sec = dot == std::string::npos ? "" : b.key.name.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? b.key.name : b.key.name.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += "# " + b.key.doc + "\n" + leaf + " = " + b.get(cfg) + "\n";
  }
  return out;
}

}  // namespace hurmacl
