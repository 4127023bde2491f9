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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hurmacl/metrics.hpp"
#include "hurmacl/trainer.hpp"
#include "hurmacl/zip.hpp"
#include "support.hpp"

using namespace hurmacl;

namespace {

ModelConfig small_model(int categories = 4) {
  ModelConfig m;
  m.unet.depth = 3;
  m.unet.base_channels = 4;
  m.unet.num_categories = categories;
  m.vim.patch_h = m.vim.patch_w = 2;
  m.vim.embed_dim = 8;
  m.vim.state_dim = 4;
  m.vim.blocks = 1;
  m.dcnn.layers = 1;
  m.dcnn.width = 4;
  return m;
}

std::vector<Sample> phantoms(int n, int size = 32, std::uint64_t seed = 1) {
  std::vector<Sample> out;
  const PhantomSpec spec = PhantomSpec::standard(size, 4);
  for (int i = 0; i < n; ++i) out.push_back(generate_phantom(spec, derive_seed(seed, "t" + std::to_string(i))));
  return out;
}

template <typename A, typename B>
bool same_bits(const A& a, const B& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

bool same_params(const ParameterStore<float>& a, const ParameterStore<float>& b) {
  if (a.names() != b.names()) return false;
  for (const auto& name : a.names())
    if (!same_bits(a.value(name).vec(), b.value(name).vec())) return false;
  return true;
}

}  // namespace

TEST_SUITE("objective_trainer") {

TEST_CASE("weighted total") {
  CHECK(total_loss(1, 1, 1, 0.5, 0.1) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(total_loss(2, 3, 4, 0, 0) == 2);
}

TEST_CASE("Nesterov update") {
  Tensor<float> p({2}, std::vector<float>{1.0f, -2.0f});
  const Tensor<float> g({2}, std::vector<float>{0.5f, 0.25f});
  Tensor<float> v({2});
  SgdNesterov<float>::update(p, g, v, 0.1f, 0.9f);
  // v = g, p -= lr * (g + mu * g)
  CHECK(v[0] == 0.5f);
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * (0.5 + 0.45)));
  CHECK(p[1] == doctest::Approx(-2.0 - 0.1 * (0.25 + 0.225)));
  SgdNesterov<float>::update(p, g, v, 0.1f, 0.9f);
  CHECK(v[0] == doctest::Approx(0.95));
  CHECK(p[0] == doctest::Approx(0.905 - 0.1 * (0.5 + 0.9 * 0.95)));
}

TEST_CASE("poly learning rate") {
  CHECK(lr_schedule(0, 300, 0.01) == 0.01);
  CHECK(lr_schedule(150, 300, 0.01) == doctest::Approx(0.01 * std::pow(0.5, 0.9)));
  CHECK(lr_schedule(300, 300, 0.01) == 0.0);
  CHECK(lr_schedule(400, 300, 0.01) == 0.0);
  CHECK(steps_per_epoch(10, 4) == 3);
  CHECK(steps_per_epoch(8, 4) == 2);
}

TEST_CASE("loss terms add across levels") {
  const auto model = small_model();
  TrainConfig t;
  t.threshold = 0.0;
  const auto data = phantoms(1);
  ParameterStore<double> s;
  init_model(s, model, 32, 32, 3);
  Graph<double> g;
  const auto obj = build_objective(g, s, model, t, data[0]);
  REQUIRE(obj.levels.size() == 2);
  double l2 = 0, l3 = 0;
  for (const auto& lv : obj.levels) {
    REQUIRE_FALSE(lv.empty);
    l2 += g.item(lv.vim_loss) + g.item(lv.dcnn_loss);
    l3 += g.item(lv.vim_student) + g.item(lv.dcnn_student);
  }
  CHECK(g.item(obj.loss2) == doctest::Approx(l2).epsilon(1e-12));
  CHECK(g.item(obj.loss3) == doctest::Approx(l3).epsilon(1e-12));
  CHECK(g.item(obj.total) ==
        doctest::Approx(total_loss(g.item(obj.loss1), l2, l3, t.alpha, t.beta)).epsilon(1e-12));

  t.levels = LevelSelection::kFinest;
  Graph<double> h;
  const auto fin = build_objective(h, s, model, t, data[0]);
  REQUIRE(fin.levels.size() == 1);
  CHECK(fin.levels[0].level == 1);
  CHECK(h.item(fin.loss2) == doctest::Approx(g.item(obj.levels[1].vim_loss) + g.item(obj.levels[1].dcnn_loss)));

  // T = 1 retains nothing, so only the backbone term is left.
  t.threshold = 1.0;
  Graph<double> e;
  const auto none = build_objective(e, s, model, t, data[0]);
  CHECK(e.item(none.total) == e.item(none.loss1));
}

TEST_CASE("full objective gradient matches finite differences on a few parameters") {
  const auto model = small_model();
  TrainConfig t;
  t.threshold = 0.0;
  // The distillation term detaches its teacher, so its gradient is not the
  // derivative of its value; it is checked on its own in the hfd suite.
  t.beta = 0.0;
  const auto data = phantoms(1);
  ParameterStore<double> s;
  init_model(s, model, 32, 32, 5);
  // Zero offsets sit exactly on the bilinear lattice kinks; move off them.
  Rng rng(6);
  for (auto& [name, e] : s)
    if (name.find(".offset") != std::string::npos)
      for (auto& v : e.value.vec()) v = rng.uniform(-0.01, 0.01);
  const auto rep = test::param_grad_check(
      s, [&](Graph<double>& g) { return build_objective(g, s, model, t, data[0]).total; }, 2, 1e-6);
  CHECK(rep.worst < 1e-2);
}

TEST_CASE("alpha = beta = 0 reproduces the plain U-Net trainer bit for bit") {
  const auto model = small_model();
  TrainConfig t;
  t.alpha = 0;
  t.beta = 0;
  t.batch_size = 2;
  t.epochs = 10;
  const auto data = phantoms(4);
  TrainOptions opts;
  opts.max_steps = 3;
  const Checkpoint full = train_model(model, t, data, opts);
  const Checkpoint plain = train_plain_unet(model, t, data, opts);
  REQUIRE(full.step == 3);
  REQUIRE(plain.step == 3);
  for (const auto& name : plain.params.names()) {
    INFO(name);
    CHECK(same_bits(full.params.value(name).vec(), plain.params.value(name).vec()));
    CHECK(same_bits(full.momentum.at(name).vec(), plain.momentum.at(name).vec()));
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(full.history[i].loss1 == plain.history[i].loss1);
}

TEST_CASE("checkpoint round trip and resume are exact") {
  const auto model = small_model();
  TrainConfig t;
  t.batch_size = 2;
  t.epochs = 3;
  const auto data = phantoms(3);
  const Checkpoint straight = train_model(model, t, data);
  CHECK(straight.step == 6);
  CHECK(straight.epoch == 3);

  TrainOptions first;
  first.max_steps = 3;
  Checkpoint part = train_model(model, t, data, first);
  const auto path = test::tmp_path("resume.ckpt");
  save_checkpoint(part, path);
  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.step == 3);
  CHECK(same_params(loaded.params, part.params));
  CHECK(loaded.history.size() == part.history.size());
  train(loaded, data);
  CHECK(loaded.step == straight.step);
  CHECK(same_params(loaded.params, straight.params));
  for (const auto& [name, v] : straight.momentum) CHECK(same_bits(loaded.momentum.at(name).vec(), v.vec()));
  REQUIRE(loaded.history.size() == straight.history.size());
  for (std::size_t i = 0; i < straight.history.size(); ++i)
    CHECK(step_log_row(loaded.history[i]) == step_log_row(straight.history[i]));
}

TEST_CASE("checkpoint loader rejects tampered files") {
  const auto model = small_model();
  TrainConfig t;
  const Checkpoint c = init_checkpoint(model, t, TrainMode::kFull, 32, 32);
  const auto path = test::tmp_path("tamper.ckpt");
  save_checkpoint(c, path);
  auto entries = zip::read(path);

  SUBCASE("wrong shape") {
    const std::string name = c.params.names().front();
    auto& bytes = entries.at("params/" + name + ".f32");
    bytes.resize(bytes.size() + 4);
  }
  SUBCASE("manifest shape mismatch") {
    std::string m(entries.at("manifest.json").begin(), entries.at("manifest.json").end());
    const auto pos = m.find("\"base_channels\": 4");
    REQUIRE(pos != std::string::npos);
    m.replace(pos, 18, "\"base_channels\": 8");
    entries["manifest.json"] = {m.begin(), m.end()};
  }
  zip::Writer w;
  for (const auto& [name, bytes] : entries) w.add(name, bytes);
  const auto bad = test::tmp_path("tamper_bad.ckpt");
  w.write(bad);
  try {
    load_checkpoint(bad);
    FAIL("accepted a tampered checkpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
  // Truncation is caught by the archive reader.
  {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(bad, std::ios::binary | std::ios::trunc);
    out << all.substr(0, all.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(bad), Error);
}

TEST_CASE("non-finite loss stops training") {
  const auto model = small_model();
  TrainConfig t;
  t.epochs = 2;
  const auto data = phantoms(2);
  Checkpoint c = init_checkpoint(model, t, TrainMode::kFull, 32, 32);
  c.params.value(c.params.names().front())[0] = std::nanf("");
  try {
    train(c, data);
    FAIL("no divergence reported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDiverged);
  }
  CHECK(c.step == 0);
}

TEST_CASE("mismatched samples are rejected") {
  const auto model = small_model();
  TrainConfig t;
  auto data = phantoms(1);
  data.push_back(phantoms(1, 64)[0]);
  CHECK_THROWS_AS(train_model(model, t, data), Error);
}

TEST_CASE("a single sample is memorised") {
  const auto model = small_model();
  TrainConfig t;
  t.batch_size = 1;
  t.epochs = 200;
  t.lr = 0.01;
  t.momentum = 0.9;
  const auto data = phantoms(1);
  const Checkpoint c = train_model(model, t, data);
  REQUIRE(c.history.size() == 200);
  double early = 0, late = 0, early_total = 0, late_total = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    early += c.history[i].loss1;
    late += c.history[c.history.size() - 1 - i].loss1;
    early_total += c.history[i].total;
    late_total += c.history[c.history.size() - 1 - i].total;
  }
  CHECK(late < 0.5 * early);
  CHECK(late_total < early_total);
  const LabelGrid pred = predict_labels(c, data[0].image);
  CHECK(dsc(pred, data[0].labels, 1).value >= 0.95);
}

}  // TEST_SUITE
