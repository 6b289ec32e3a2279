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

#include "xmodal/xmodal.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "xmodal/config.hpp"
#include "xmodal/error.hpp"
#include "xmodal/pipeline.hpp"
#include "xmodal/service.hpp"

struct xm_config {
  xmodal::RunConfig value;
};

namespace {

thread_local std::string g_last_error;

xm_status to_status(xmodal::ErrorCode c) { return static_cast<xm_status>(static_cast<int>(c)); }

template <typename Fn>
xm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return XM_OK;
  } catch (const xmodal::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return XM_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return XM_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return XM_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return XM_INTERNAL;
  }
}

void require_arg(const void* p, const char* name) {
  xmodal::require(p != nullptr, std::string(name) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* xm_version(void) { return "1.0.0"; }

const char* xm_status_name(xm_status s) {
  switch (s) {
    case XM_OK: return "ok";
    case XM_INVALID_ARGUMENT: return "invalid argument";
    case XM_IO: return "i/o error";
    case XM_FORMAT: return "format error";
    case XM_STATE: return "invalid state";
    case XM_INFEASIBLE: return "infeasible";
    case XM_SHAPE_MISMATCH: return "shape mismatch";
    case XM_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* xm_last_error(void) { return g_last_error.c_str(); }

xm_status xm_config_new(xm_config** out) {
  return guarded([&] {
    require_arg(out, "out");
    *out = new xm_config();
  });
}

void xm_config_free(xm_config* config) { delete config; }

xm_status xm_config_load(xm_config* config, const char* path) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(path, "path");
    config->value = xmodal::load_config(path, config->value);
  });
}

xm_status xm_config_set(xm_config* config, const char* key, const char* value) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(key, "key");
    require_arg(value, "value");
    config->value.set(key, value);
  });
}

xm_status xm_config_validate(const xm_config* config) {
  return guarded([&] {
    require_arg(config, "config");
    config->value.validate();
  });
}

xm_status xm_config_text(const xm_config* config, char* buffer, size_t size, size_t* needed) {
  return guarded([&] {
    require_arg(config, "config");
    const std::string text = config->value.to_text();
    if (needed) *needed = text.size() + 1;
    if (!buffer) return;
    xmodal::require(size > text.size(), "buffer too small for the config text");
    std::memcpy(buffer, text.c_str(), text.size() + 1);
  });
}

xm_status xm_config_get(const xm_config* config, const char* key, char* buffer, size_t size,
                        size_t* needed) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(key, "key");
    const std::string v = config->value.get(key);
    if (needed) *needed = v.size() + 1;
    if (!buffer) return;
    xmodal::require(size > v.size(), "buffer too small for the config value");
    std::memcpy(buffer, v.c_str(), v.size() + 1);
  });
}

xm_status xm_config_hash(const xm_config* config, char* buffer, size_t size) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(buffer, "buffer");
    const std::string h = config->value.hash();
    xmodal::require(size > h.size(), "buffer too small for the config hash");
    std::memcpy(buffer, h.c_str(), h.size() + 1);
  });
}

xm_status xm_run_stage(const xm_config* config, const char* stage, xm_log_fn log, void* user) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(stage, "stage");
    xmodal::LogFn fn;
    if (log) fn = [log, user](std::string_view m) { log(std::string(m).c_str(), user); };
    xmodal::Pipeline p(config->value, fn);
    if (std::strcmp(stage, "pipeline") == 0) {
      p.run_all();
    } else {
      p.run(xmodal::parse_stage(stage));
    }
  });
}

xm_status xm_analyze_file(const char* dataset_path, const char* out_dir, const char* timeout_policy) {
  return guarded([&] {
    require_arg(dataset_path, "dataset_path");
    require_arg(out_dir, "out_dir");
    const auto policy = timeout_policy ? xmodal::parse_timeout_policy(timeout_policy)
                                       : xmodal::TimeoutPolicy::kExclude;
    xmodal::analyze_dataset(dataset_path, out_dir, policy);
  });
}

xm_status xm_serve(const xm_config* config, const char* host, int port, const char* journal_dir,
                   xm_log_fn log, void* user) {
  return guarded([&] {
    require_arg(config, "config");
    require_arg(host, "host");
    xmodal::require(port >= 0 && port <= 65535, "port outside 0..65535");
    xmodal::ServiceOptions o;
    o.trial_seed = config->value.seed;
    o.replication = config->value.replication;
    if (journal_dir) o.journal_dir = journal_dir;
    xmodal::ExperimentService service(o);
    const int bound = service.bind(host, port);
    if (log) {
      const std::string m = "serving on http://" + std::string(host) + ":" + std::to_string(bound) + " (" +
                            std::to_string(service.session_count()) + " session(s) restored)";
      log(m.c_str(), user);
    }
    service.listen();
  });
}

}  // extern "C"
