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

#include "hurmacl/hurmacl.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "hurmacl/commands.hpp"
#include "hurmacl/metrics.hpp"

struct hm_config {
  hurmacl::RunConfig cfg;
};

struct hm_checkpoint {
  hurmacl::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
hm_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return HM_OK;
  } catch (const hurmacl::Error& e) {
    g_last_error = e.what();
    return static_cast<hm_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return HM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return HM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) hurmacl::fail(hurmacl::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap >= s.size() + 1) std::memcpy(buf, s.c_str(), s.size() + 1);
  else if (buf && cap > 0) buf[0] = '\0';
}

}  // namespace

extern "C" {

const char* hm_version(void) { return "0.1.0"; }

const char* hm_status_name(hm_status s) {
  switch (s) {
    case HM_OK: return "ok";
    case HM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HM_ERR_IO: return "i/o error";
    case HM_ERR_PARSE: return "parse error";
    case HM_ERR_UNSUPPORTED: return "unsupported";
    case HM_ERR_CONFIG: return "configuration error";
    case HM_ERR_DIVERGED: return "training diverged";
    case HM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* hm_last_error(void) { return g_last_error.c_str(); }

hm_status hm_config_new(hm_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new hm_config();
  });
}

void hm_config_free(hm_config* cfg) { delete cfg; }

hm_status hm_config_load(hm_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "cfg");
    need(path, "path");
    cfg->cfg = hurmacl::load_config(path);
  });
}

hm_status hm_config_parse(hm_config* cfg, const char* text) {
  return guarded([&] {
    need(cfg, "cfg");
    need(text, "toml_text");
    cfg->cfg = hurmacl::parse_config(text);
  });
}

hm_status hm_config_set(hm_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    hurmacl::set_config_value(cfg->cfg, key, value);
  });
}

hm_status hm_config_get(const hm_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    copy_out(hurmacl::get_config_value(cfg->cfg, key), buf, cap, needed);
  });
}

hm_status hm_config_dump(const hm_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    copy_out(hurmacl::dump_config(cfg->cfg), buf, cap, needed);
  });
}

size_t hm_config_key_count(void) { return hurmacl::config_keys().size(); }

const char* hm_config_key_name(size_t i) {
  const auto& k = hurmacl::config_keys();
  return i < k.size() ? k[i].name.c_str() : nullptr;
}

const char* hm_config_key_type(size_t i) {
  const auto& k = hurmacl::config_keys();
  return i < k.size() ? k[i].type.c_str() : nullptr;
}

const char* hm_config_key_doc(size_t i) {
  const auto& k = hurmacl::config_keys();
  return i < k.size() ? k[i].doc.c_str() : nullptr;
}

hm_status hm_run(const hm_config* cfg, const char* command, hm_log_fn log, void* user) {
  return guarded([&] {
    need(cfg, "cfg");
    need(command, "command");
    const hurmacl::Reporter report = [&](const std::string& line) {
      if (log) log(line.c_str(), user);
    };
    const std::string cmd = command;
    if (cmd == "generate-data") hurmacl::cmd_generate_data(cfg->cfg, report);
    else if (cmd == "train") hurmacl::cmd_train(cfg->cfg, report);
    else if (cmd == "evaluate") hurmacl::cmd_evaluate(cfg->cfg, report);
    else if (cmd == "predict") hurmacl::cmd_predict(cfg->cfg, report);
    else if (cmd == "sweep-threshold") hurmacl::cmd_sweep_threshold(cfg->cfg, report);
    else if (cmd == "export-uncertainty") hurmacl::cmd_export_uncertainty(cfg->cfg, report);
    else hurmacl::fail(hurmacl::ErrorCode::kInvalidArgument, "unknown command '" + cmd + "'");
  });
}

hm_status hm_checkpoint_load(const char* path, hm_checkpoint** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto* h = new hm_checkpoint();
    try {
      h->ckpt = hurmacl::load_checkpoint(path);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

void hm_checkpoint_free(hm_checkpoint* ckpt) { delete ckpt; }

hm_status hm_checkpoint_info(const hm_checkpoint* ckpt, int* height, int* width, int* categories,
                             int64_t* steps) {
  return guarded([&] {
    need(ckpt, "ckpt");
    if (height) *height = ckpt->ckpt.height;
    if (width) *width = ckpt->ckpt.width;
    if (categories) *categories = ckpt->ckpt.model.unet.num_categories;
    if (steps) *steps = ckpt->ckpt.step;
  });
}

hm_status hm_checkpoint_predict(const hm_checkpoint* ckpt, const float* image, int height, int width,
                                int32_t* labels) {
  return guarded([&] {
    need(ckpt, "ckpt");
    need(image, "image");
    need(labels, "labels");
    if (height <= 0 || width <= 0)
      hurmacl::fail(hurmacl::ErrorCode::kInvalidArgument, "height and width must be positive");
    hurmacl::IntensityGrid g;
    g.shape = {1, height, width};
    g.values.assign(image, image + static_cast<std::size_t>(height) * width);
    g.validate(true);
    const auto pred = hurmacl::predict_labels(ckpt->ckpt, g);
    std::memcpy(labels, pred.labels.data(), pred.labels.size() * sizeof(int32_t));
  });
}

}  // extern "C"
