// Copyright 2026 The xmodal Authors. All Rights Reserved.
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

/* C interface of libxmodal. All functions are thread-compatible: distinct
 * handles may be used from distinct threads. Error messages are kept per
 * thread and returned by xm_last_error(). */
#ifndef XMODAL_XMODAL_H_
#define XMODAL_XMODAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define XM_API __declspec(dllexport)
#else
#define XM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xm_status {
  XM_OK = 0,
  XM_INVALID_ARGUMENT = 1,
  XM_IO = 2,
  XM_FORMAT = 3,
  XM_STATE = 4,
  XM_INFEASIBLE = 5,
  XM_SHAPE_MISMATCH = 6,
  XM_INTERNAL = 7
} xm_status;

typedef struct xm_config xm_config;

/* Receives progress lines of pipeline stages and the service. */
typedef void (*xm_log_fn)(const char* message, void* user);

XM_API const char* xm_version(void);
XM_API const char* xm_status_name(xm_status status);
/* Message of the last failed call on this thread, "" when none. */
XM_API const char* xm_last_error(void);

/* Configuration with built-in defaults. */
XM_API xm_status xm_config_new(xm_config** out);
XM_API void xm_config_free(xm_config* config);
/* Overlays a key = value file on the current values. */
XM_API xm_status xm_config_load(xm_config* config, const char* path);
XM_API xm_status xm_config_set(xm_config* config, const char* key, const char* value);
XM_API xm_status xm_config_validate(const xm_config* config);
/* Writes the canonical text form; `needed` receives the size including the
 * terminating zero. Passing a NULL buffer queries the size. */
XM_API xm_status xm_config_text(const xm_config* config, char* buffer, size_t size, size_t* needed);
/* Canonical text of one key's value; size handling as in xm_config_text. */
XM_API xm_status xm_config_get(const xm_config* config, const char* key, char* buffer, size_t size,
                               size_t* needed);
/* 16 hex digits plus terminator: buffer must hold 17 bytes. */
XM_API xm_status xm_config_hash(const xm_config* config, char* buffer, size_t size);

/* Runs `stage` ("generate", "pretrain", "oracle", "train", "evaluate",
 * "analyze", or "pipeline" for all of them) after its prerequisites. */
XM_API xm_status xm_run_stage(const xm_config* config, const char* stage, xm_log_fn log, void* user);

/* Writes CSV/summary/SVG reports for one response file into out_dir/reports.
 * timeout_policy is "exclude" or "error". */
XM_API xm_status xm_analyze_file(const char* dataset_path, const char* out_dir, const char* timeout_policy);

/* Serves the human experiment until the process is stopped. Uses the
 * configuration's seed and replication for the trial set. */
XM_API xm_status xm_serve(const xm_config* config, const char* host, int port, const char* journal_dir,
                          xm_log_fn log, void* user);

#ifdef __cplusplus
}
#endif

#endif /* XMODAL_XMODAL_H_ */
