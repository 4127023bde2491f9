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

// Exercises the shared library strictly through its C header, plus the CLI
// executable through the shell.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hurmacl/hurmacl.h"

namespace {

std::string get(const hm_config* c, const char* key) {
  size_t need = 0;
  REQUIRE(hm_config_get(c, key, nullptr, 0, &need) == HM_OK);
  std::string buf(need, '\0');
  REQUIRE(hm_config_get(c, key, buf.data(), buf.size(), &need) == HM_OK);
  buf.resize(need - 1);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HURMACL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string capture(const std::string& args) {
  const std::string cmd = std::string(HURMACL_CLI_PATH) + " " + args + " 2>&1";
  std::string out;
  if (FILE* p = popen(cmd.c_str(), "r")) {
    char buf[512];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    pclose(p);
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("status names and version") {
  CHECK(std::string(hm_version()) == "0.1.0");
  CHECK(std::string(hm_status_name(HM_OK)) == "ok");
  CHECK(std::string(hm_status_name(HM_ERR_CONFIG)) == "configuration error");
}

TEST_CASE("config round trip through the C API") {
  hm_config* c = nullptr;
  REQUIRE(hm_config_new(&c) == HM_OK);
  CHECK(hm_config_set(c, "train.alpha", "0.75") == HM_OK);
  CHECK(get(c, "train.alpha") == "0.75");
  CHECK(hm_config_set(c, "train.alpah", "0.75") == HM_ERR_CONFIG);
  CHECK(std::string(hm_last_error()).find("train.alpah") != std::string::npos);
  CHECK(hm_config_parse(c, "[train]\nepochs = 5\n") == HM_OK);
  CHECK(get(c, "train.epochs") == "5");
  CHECK(get(c, "train.alpha") == "0.5");  // parse starts from defaults
  CHECK(hm_config_parse(c, "[train]\nepochs = 'x'\n") == HM_ERR_CONFIG);
  CHECK(hm_config_load(c, "/nonexistent/cfg.toml") != HM_OK);

  char small[2];
  size_t need = 0;
  CHECK(hm_config_get(c, "paths.data", small, sizeof small, &need) == HM_OK);
  CHECK(need == 7);  // "data" quoted plus NUL
  CHECK(hm_config_dump(c, nullptr, 0, &need) == HM_OK);
  CHECK(need > 100);

  REQUIRE(hm_config_key_count() > 0);
  CHECK(std::string(hm_config_key_name(0)).size() > 0);
  CHECK(hm_config_key_name(hm_config_key_count()) == nullptr);
  CHECK(hm_config_set(nullptr, "train.alpha", "1") == HM_ERR_INVALID_ARGUMENT);
  CHECK(hm_run(c, "fly", nullptr, nullptr) == HM_ERR_INVALID_ARGUMENT);
  hm_config_free(c);
}

TEST_CASE("checkpoint errors surface as statuses") {
  hm_checkpoint* k = nullptr;
  CHECK(hm_checkpoint_load("/nonexistent.ckpt", &k) == HM_ERR_IO);
  CHECK(k == nullptr);
  const std::string junk = std::string(HURMACL_TEST_TMP) + "/junk.ckpt";
  std::ofstream(junk) << "not a zip archive at all, just some words";
  CHECK(hm_checkpoint_load(junk.c_str(), &k) == HM_ERR_PARSE);
}

TEST_CASE("CLI exit codes and usage") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("train --no-such-flag") == 1);
  CHECK(run_cli("--set train.alpah=1 train") == 1);
  CHECK(run_cli("evaluate --quiet --ckpt /nonexistent.ckpt") == 1);
  const std::string help = capture("--help");
  CHECK(help.find("generate-data") != std::string::npos);
  CHECK(help.find("train.alpha") != std::string::npos);
  CHECK(capture("train --bogus").find("Usage") != std::string::npos);
  CHECK(capture("train --alpha abc").find("train.alpha") != std::string::npos);
}

TEST_CASE("tiny end-to-end run through the CLI") {
  const std::string dir = std::string(HURMACL_TEST_TMP) + "/cli_e2e";
  const std::string common = " --quiet --data " + dir + "/data --out " + dir + "/out";
  REQUIRE(run_cli("generate-data --quiet --count 2 --size 32 --categories 4 --out " + dir + "/data") == 0);
  REQUIRE(run_cli("train --epochs 1 --batch-size 2 --categories 4 --base-channels 4"
                  " --set model.depth=3 --set model.vim_embed_dim=8 --set model.vim_patch=2"
                  " --set model.dcnn_width=4" + common) == 0);
  CHECK(run_cli("evaluate" + common) == 0);
  std::ifstream csv(dir + "/out/metrics.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("case,dsc_1", 0) == 0);

  hm_checkpoint* k = nullptr;
  REQUIRE(hm_checkpoint_load((dir + "/out/model.ckpt").c_str(), &k) == HM_OK);
  int h = 0, w = 0, cats = 0;
  int64_t steps = 0;
  CHECK(hm_checkpoint_info(k, &h, &w, &cats, &steps) == HM_OK);
  CHECK(h == 32);
  CHECK(cats == 4);
  CHECK(steps == 1);
  std::vector<float> img(32 * 32, 0.2f);
  std::vector<int32_t> lab(img.size(), -1);
  CHECK(hm_checkpoint_predict(k, img.data(), 32, 32, lab.data()) == HM_OK);
  for (int32_t v : lab) CHECK((v >= 0 && v < 4));
  CHECK(hm_checkpoint_predict(k, img.data(), 16, 16, lab.data()) == HM_ERR_INVALID_ARGUMENT);
  hm_checkpoint_free(k);
}

}  // TEST_SUITE
