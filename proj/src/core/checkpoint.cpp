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

#include <cstring>
#include <filesystem>

#include "json.hpp"
#include "hurmacl/trainer.hpp"
#include "hurmacl/zip.hpp"

namespace hurmacl {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "hurmacl-checkpoint";
constexpr int kVersion = 1;

json model_json(const ModelConfig& m) {
  return {
      {"unet",
       {{"depth", m.unet.depth},
        {"base_channels", m.unet.base_channels},
        {"num_categories", m.unet.num_categories},
        {"kernel", m.unet.kernel},
        {"normalization", "instance"},
        {"activation", "leaky_relu"},
        {"leaky_slope", m.unet.leaky_slope},
        {"norm_eps", m.unet.norm_eps}}},
      {"vim",
       {{"patch_h", m.vim.patch_h},
        {"patch_w", m.vim.patch_w},
        {"embed_dim", m.vim.embed_dim},
        {"state_dim", m.vim.state_dim},
        {"blocks", m.vim.blocks},
        {"residual", m.vim.residual},
        {"ln_eps", m.vim.ln_eps}}},
      {"dcnn",
       {{"layers", m.dcnn.layers},
        {"width", m.dcnn.width},
        {"kernel", m.dcnn.kernel},
        {"leaky_slope", m.dcnn.leaky_slope}}},
  };
}

ModelConfig model_from(const json& j) {
  ModelConfig m;
  const auto& u = j.at("unet");
  m.unet.depth = u.at("depth");
  m.unet.base_channels = u.at("base_channels");
  m.unet.num_categories = u.at("num_categories");
  m.unet.kernel = u.at("kernel");
  if (u.at("normalization") != "instance" || u.at("activation") != "leaky_relu")
    fail(ErrorCode::kUnsupported, "checkpoint: unsupported normalization/activation");
  m.unet.leaky_slope = u.at("leaky_slope");
  m.unet.norm_eps = u.at("norm_eps");
  const auto& v = j.at("vim");
  m.vim.patch_h = v.at("patch_h");
  m.vim.patch_w = v.at("patch_w");
  m.vim.embed_dim = v.at("embed_dim");
  m.vim.state_dim = v.at("state_dim");
  m.vim.blocks = v.at("blocks");
  m.vim.residual = v.at("residual");
  m.vim.ln_eps = v.at("ln_eps");
  const auto& d = j.at("dcnn");
  m.dcnn.layers = d.at("layers");
  m.dcnn.width = d.at("width");
  m.dcnn.kernel = d.at("kernel");
  m.dcnn.leaky_slope = d.at("leaky_slope");
  return m;
}

json train_json(const TrainConfig& t) {
  return {{"alpha", t.alpha},
          {"beta", t.beta},
          {"threshold", t.threshold},
          {"lr", t.lr},
          {"momentum", t.momentum},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"levels", t.levels == LevelSelection::kAll ? "all" : "finest"},
          {"level_loss1", t.level_loss1},
          {"seed", t.seed}};
}

TrainConfig train_from(const json& j) {
  TrainConfig t;
  t.alpha = j.at("alpha");
  t.beta = j.at("beta");
  t.threshold = j.at("threshold");
  t.lr = j.at("lr");
  t.momentum = j.at("momentum");
  t.epochs = j.at("epochs");
  t.batch_size = j.at("batch_size");
  const std::string levels = j.at("levels");
  if (levels == "all") {
    t.levels = LevelSelection::kAll;
  } else if (levels == "finest") {
    t.levels = LevelSelection::kFinest;
  } else {
    fail(ErrorCode::kParse, "checkpoint: train.levels must be \"all\" or \"finest\"");
  }
  t.level_loss1 = j.at("level_loss1");
  t.seed = j.at("seed");
  return t;
}

std::vector<std::uint8_t> to_bytes(const Tensor<float>& t) {
  std::vector<std::uint8_t> out(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &t[i], 4);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  return out;
}

Tensor<float> from_bytes(const std::vector<std::uint8_t>& bytes, const std::vector<int>& shape,
                         const std::string& what) {
  Tensor<float> t(shape);
  if (bytes.size() != t.size() * 4)
    fail(ErrorCode::kParse, "checkpoint: " + what + " holds " + std::to_string(bytes.size()) +
                                " bytes but manifest shape " + shape_str(shape) + " needs " +
                                std::to_string(t.size() * 4));
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    std::memcpy(&t[i], &u, 4);
  }
  return t;
}

const std::vector<std::uint8_t>& entry(const std::map<std::string, std::vector<std::uint8_t>>& files,
                                       const std::string& name) {
  auto it = files.find(name);
  if (it == files.end()) fail(ErrorCode::kParse, "checkpoint: missing entry " + name);
  return it->second;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json params = json::array();
  zip::Writer w;
  for (const auto& [name, e] : c.params) {
    const bool has_m = c.momentum.contains(name);
    params.push_back({{"name", name}, {"shape", e.value.shape()}, {"momentum", has_m}});
    w.add("params/" + name + ".f32", to_bytes(e.value));
    if (has_m) w.add("momentum/" + name + ".f32", to_bytes(c.momentum.at(name)));
  }
  json history = json::array();
  for (const auto& s : c.history)
    history.push_back({s.step, s.epoch, s.lr, s.loss1, s.loss2_vim, s.loss2_dcnn, s.l_pm, s.l_pd,
                       s.total, s.hard, s.count_m});
  const json manifest = {
      {"format", kFormat},
      {"version", kVersion},
      {"mode", c.mode == TrainMode::kFull ? "full" : "plain"},
      {"height", c.height},
      {"width", c.width},
      {"step", c.step},
      {"epoch", c.epoch},
      {"model", model_json(c.model)},
      {"train", train_json(c.train)},
      {"params", params},
      {"history_columns",
       {"step", "epoch", "lr", "loss_1", "loss_2_1", "loss_2_2", "L_P_M", "L_P_D", "total", "hard",
        "M"}},
      {"history", history},
  };
  const std::string text = manifest.dump(1);
  w.add("manifest.json", std::vector<std::uint8_t>(text.begin(), text.end()));
  w.write(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto files = zip::read(path);
  const auto& mbytes = entry(files, "manifest.json");
  json m;
  try {
    m = json::parse(mbytes.begin(), mbytes.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "checkpoint: manifest.json: " + std::string(e.what()));
  }
  try {
    if (m.at("format") != kFormat) fail(ErrorCode::kParse, "checkpoint: not a hurmacl checkpoint");
    if (m.at("version") != kVersion)
      fail(ErrorCode::kUnsupported, "checkpoint: unsupported version " + m.at("version").dump());
    const std::string mode = m.at("mode");
    if (mode != "full" && mode != "plain") fail(ErrorCode::kParse, "checkpoint: bad mode " + mode);

    // Start from a freshly shaped model so every stored tensor is checked
    // against the shapes its config implies.
    Checkpoint c = init_checkpoint(model_from(m.at("model")), train_from(m.at("train")),
                                   mode == "full" ? TrainMode::kFull : TrainMode::kPlain,
                                   m.at("height"), m.at("width"));
    c.step = m.at("step");
    c.epoch = m.at("epoch");
    std::size_t seen = 0;
    for (const auto& p : m.at("params")) {
      const std::string name = p.at("name");
      const std::vector<int> shape = p.at("shape");
      if (!c.params.contains(name))
        fail(ErrorCode::kParse, "checkpoint: unexpected parameter " + name);
      if (shape != c.params.value(name).shape())
        fail(ErrorCode::kParse, "checkpoint: parameter " + name + " has manifest shape " +
                                    shape_str(shape) + ", model expects " +
                                    shape_str(c.params.value(name).shape()));
      c.params.value(name) = from_bytes(entry(files, "params/" + name + ".f32"), shape, name);
      if (p.at("momentum").get<bool>())
        c.momentum.emplace(name, from_bytes(entry(files, "momentum/" + name + ".f32"), shape,
                                            "momentum of " + name));
      ++seen;
    }
    if (seen != c.params.size())
      fail(ErrorCode::kParse, "checkpoint: manifest lists " + std::to_string(seen) + " of " +
                                  std::to_string(c.params.size()) + " parameters");
    for (const auto& r : m.at("history")) {
      if (r.size() != 11) fail(ErrorCode::kParse, "checkpoint: malformed history row");
      StepLog s;
      s.step = r[0];
      s.epoch = r[1];
      s.lr = r[2];
      s.loss1 = r[3];
      s.loss2_vim = r[4];
      s.loss2_dcnn = r[5];
      s.l_pm = r[6];
      s.l_pd = r[7];
      s.total = r[8];
      s.hard = r[9];
      s.count_m = r[10];
      c.history.push_back(s);
    }
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "checkpoint: manifest.json: " + std::string(e.what()));
  }
}

}  // namespace hurmacl
