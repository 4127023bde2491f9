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

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hurmacl/hurmacl.h"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Flags shared by every subcommand.
const std::vector<Flag> kCommon = {
    {"--seed", "seed", "master seed"},
    {"--data", "paths.data", "dataset directory"},
    {"--out", "paths.out", "output directory"},
    {"--jobs", "runtime.jobs", "evaluation worker threads"},
};

const std::map<std::string, std::vector<Flag>> kCommandFlags = {
    {"generate-data",
     {{"--count", "data.count", "number of phantoms"},
      {"--size", "data.size", "phantom height and width"},
      {"--categories", "data.categories", "categories including background (4 or 5)"},
      {"--noise", "data.noise_sigma", "Gaussian noise sigma"}}},
    {"train",
     {{"--epochs", "train.epochs", "training epochs"},
      {"--batch-size", "train.batch_size", "samples per step"},
      {"--alpha", "train.alpha", "branch loss weight"},
      {"--beta", "train.beta", "distillation loss weight"},
      {"--threshold", "train.threshold", "uncertainty threshold T"},
      {"--lr", "train.lr", "initial learning rate"},
      {"--levels", "train.levels", "all | finest"},
      {"--max-steps", "train.max_steps", "stop after N optimizer steps"},
      {"--resume", "train.resume", "checkpoint to continue from"},
      {"--ckpt", "paths.checkpoint", "checkpoint output path"},
      {"--log", "paths.log", "per-step CSV log path"},
      {"--categories", "data.categories", "categories including background"},
      {"--base-channels", "model.base_channels", "U-Net base channels"}}},
    {"evaluate", {{"--ckpt", "paths.checkpoint", "checkpoint to evaluate"}}},
    {"predict",
     {{"--ckpt", "paths.checkpoint", "checkpoint"},
      {"--input", "paths.input", "single image (default: every image in --data)"}}},
    {"sweep-threshold",
     {{"--ckpt", "paths.checkpoint", "reference checkpoint"},
      {"--val-data", "paths.val_data", "evaluation set (default: --data)"},
      {"--thresholds", "sweep.thresholds", "comma-separated thresholds"},
      {"--mode", "sweep.mode", "retrain | inference"}}},
    {"export-uncertainty",
     {{"--ckpt", "paths.checkpoint", "checkpoint"},
      {"--input", "paths.input", "single image (default: every image in --data)"}}},
};

const std::vector<std::pair<std::string, std::string>> kOrder = {
    {"generate-data", "write synthetic phantom image/label pairs"},
    {"train", "train the full model; writes a checkpoint and a per-step CSV log"},
    {"evaluate", "per-case DSC/ASSD report as CSV and a summary table"},
    {"predict", "predicted label volumes and overlay PNGs"},
    {"sweep-threshold", "DSC and hard-pixel fraction over a list of thresholds"},
    {"export-uncertainty", "per-level uncertainty maps as NIfTI and PNG heatmaps"},
};

bool use_color() {
  const char* no = std::getenv("HURMACL_NO_COLOR");
  return !(no && *no) && isatty(fileno(stderr));
}

void log_line(const char* line, void* user) {
  const bool color = *static_cast<bool*>(user);
  std::fprintf(stderr, color ? "\033[1;36mhurmacl\033[0m %s\n" : "hurmacl %s\n", line);
}

int report_error(hm_status s, bool color) {
  std::fprintf(stderr, color ? "\033[1;31merror\033[0m (%s): %s\n" : "error (%s): %s\n",
               hm_status_name(s), hm_last_error());
  return s == HM_ERR_INTERNAL ? 2 : 1;
}

std::string dump(const hm_config* cfg) {
  size_t need = 0;
  hm_config_dump(cfg, nullptr, 0, &need);
  std::string out(need, '\0');
  hm_config_dump(cfg, out.data(), out.size(), &need);
  out.resize(need ? need - 1 : 0);
  return out;
}

std::string keys_help() {
  std::string s = "Config keys (TOML, dotted = [section] key; --set key=value overrides):\n";
  for (size_t i = 0; i < hm_config_key_count(); ++i)
    s += "  " + std::string(hm_config_key_name(i)) + " (" + hm_config_key_type(i) + ")  " +
         hm_config_key_doc(i) + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  bool color = use_color();
  CLI::App app{"hurmacl: uncertainty-guided multi-branch segmentation toolkit"};
  app.footer(keys_help());
  app.set_version_flag("--version", std::string(hm_version()));
  std::string config_path;
  std::vector<std::string> sets;
  bool quiet = false;
  app.add_option("--config", config_path, "TOML run configuration");
  app.add_option("--set", sets, "override a config key, key=value (repeatable)");
  app.add_flag("--quiet", quiet, "do not print the effective configuration");

  std::vector<std::pair<CLI::Option*, std::string>> bound;
  auto storage = std::make_shared<std::vector<std::unique_ptr<std::string>>>();
  auto bind = [&](CLI::App* sub, const Flag& f) {
    storage->push_back(std::make_unique<std::string>());
    CLI::Option* o = sub->add_option(f.name, *storage->back(), std::string(f.help) + " [" + f.key + "]");
    bound.emplace_back(o, f.key);
    return storage->back().get();
  };
  std::vector<std::pair<CLI::Option*, const std::string*>> opt_values;
  app.fallthrough();
  for (const auto& [name, desc] : kOrder) {
    CLI::App* sub = app.add_subcommand(name, desc);
    for (const auto& f : kCommon) opt_values.emplace_back(nullptr, bind(sub, f));
    for (const auto& f : kCommandFlags.at(name)) opt_values.emplace_back(nullptr, bind(sub, f));
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
    return 1;
  }

  hm_config* cfg = nullptr;
  if (hm_status s = hm_config_new(&cfg); s != HM_OK) return report_error(s, color);
  std::unique_ptr<hm_config, void (*)(hm_config*)> guard(cfg, hm_config_free);
  if (!config_path.empty())
    if (hm_status s = hm_config_load(cfg, config_path.c_str()); s != HM_OK) return report_error(s, color);

  for (std::size_t i = 0; i < bound.size(); ++i) {
    if (bound[i].first->count() == 0) continue;
    if (hm_status s = hm_config_set(cfg, bound[i].second.c_str(), opt_values[i].second->c_str()); s != HM_OK)
      return report_error(s, color);
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set expects key=value, got '%s'\n\n%s", kv.c_str(), app.help().c_str());
      return 1;
    }
    if (hm_status s = hm_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); s != HM_OK)
      return report_error(s, color);
  }

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();
  if (command.empty()) {
    char buf[64] = {0};
    size_t need = 0;
    hm_config_get(cfg, "command", buf, sizeof buf, &need);
    command = buf;
    if (command.size() >= 2) command = command.substr(1, command.size() - 2);
  }
  if (command.empty()) {
    std::fprintf(stderr, "no subcommand given\n\n%s", app.help().c_str());
    return 1;
  }
  if (!kCommandFlags.contains(command)) {
    std::fprintf(stderr, "unknown subcommand '%s'\n\n%s", command.c_str(), app.help().c_str());
    return 1;
  }
  if (!quiet) std::fprintf(stderr, "# effective configuration\n%s\n", dump(cfg).c_str());
  if (hm_status s = hm_run(cfg, command.c_str(), log_line, &color); s != HM_OK)
    return report_error(s, color);
  return 0;
}
