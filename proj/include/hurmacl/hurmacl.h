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

#ifndef HURMACL_HURMACL_H_
#define HURMACL_HURMACL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(HURMACL_BUILDING)
#define HM_API __attribute__((visibility("default")))
#else
#define HM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hm_status {
  HM_OK = 0,
  HM_ERR_INVALID_ARGUMENT = 1,
  HM_ERR_IO = 2,
  HM_ERR_PARSE = 3,
  HM_ERR_UNSUPPORTED = 4,
  HM_ERR_CONFIG = 5,
  HM_ERR_DIVERGED = 6,
  HM_ERR_INTERNAL = 7
} hm_status;

typedef struct hm_config hm_config;
typedef struct hm_checkpoint hm_checkpoint;

// Receives one progress line (no trailing newline).
typedef void (*hm_log_fn)(const char* line, void* user);

HM_API const char* hm_version(void);
HM_API const char* hm_status_name(hm_status status);
// Message of the last failed call on this thread; "" when none.
HM_API const char* hm_last_error(void);

// Run configuration: every key has a default; see hm_config_key_*.
HM_API hm_status hm_config_new(hm_config** out);
HM_API void hm_config_free(hm_config* cfg);
// Replaces cfg with defaults overlaid by a TOML file or string.
HM_API hm_status hm_config_load(hm_config* cfg, const char* path);
HM_API hm_status hm_config_parse(hm_config* cfg, const char* toml_text);
HM_API hm_status hm_config_set(hm_config* cfg, const char* key, const char* value);
// String outputs copy into buf (NUL-terminated) when cap is large enough and
// always report the required size, including the NUL, through needed.
HM_API hm_status hm_config_get(const hm_config* cfg, const char* key, char* buf, size_t cap,
                               size_t* needed);
HM_API hm_status hm_config_dump(const hm_config* cfg, char* buf, size_t cap, size_t* needed);

HM_API size_t hm_config_key_count(void);
HM_API const char* hm_config_key_name(size_t index);
HM_API const char* hm_config_key_type(size_t index);
HM_API const char* hm_config_key_doc(size_t index);

// command: generate-data, train, evaluate, predict, sweep-threshold,
// export-uncertainty. log may be NULL.
HM_API hm_status hm_run(const hm_config* cfg, const char* command, hm_log_fn log, void* user);

HM_API hm_status hm_checkpoint_load(const char* path, hm_checkpoint** out);
HM_API void hm_checkpoint_free(hm_checkpoint* ckpt);
HM_API hm_status hm_checkpoint_info(const hm_checkpoint* ckpt, int* height, int* width,
                                    int* categories, int64_t* steps);
// image: height*width floats in [0,1]; labels: height*width outputs.
HM_API hm_status hm_checkpoint_predict(const hm_checkpoint* ckpt, const float* image, int height,
                                       int width, int32_t* labels);

#ifdef __cplusplus
}
#endif

#endif  // HURMACL_HURMACL_H_
