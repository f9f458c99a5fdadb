#include "smldist/smldist.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "smld/core/error.hpp"
#include "smld/io/toml.hpp"
#include "smld/pipeline/pipeline.hpp"

namespace {

thread_local std::string g_last_error = "";

constexpr const char* kVersion = "1.0.0";

smld_status kind_to_status(smld::ErrorKind kind) {
  switch (kind) {
    case smld::ErrorKind::Config: return SMLD_ERROR_CONFIG;
    case smld::ErrorKind::Data: return SMLD_ERROR_DATA;
    case smld::ErrorKind::Numeric: return SMLD_ERROR_NUMERIC;
  }
  return SMLD_ERROR;
}

template <typename Fn>
smld_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return SMLD_OK;
  } catch (const smld::Error& e) {
    g_last_error = e.what();
    return kind_to_status(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SMLD_ERROR;
  } catch (...) {
    g_last_error = "unknown failure";
    return SMLD_ERROR;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit_report(char** slot, const nlohmann::json& j) {
  if (slot) *slot = dup_string(j.dump(2));
}

}  // namespace

struct smld_config {
  smld::io::toml::Table table;
};

extern "C" {

const char* smld_version(void) { return kVersion; }

const char* smld_last_error(void) { return g_last_error.c_str(); }

smld_status smld_config_open(const char* toml_path, smld_config** out) {
  return guarded([&] {
    if (!toml_path || !out) smld::fail_config("smld_config_open: null argument");
    auto* cfg = new smld_config{smld::io::toml::parse_file(toml_path)};
    // fail fast on invalid files
    try {
      (void)smld::pipeline::parse_run_config(cfg->table);
    } catch (...) {
      delete cfg;
      throw;
    }
    *out = cfg;
  });
}

smld_status smld_config_default(smld_config** out) {
  return guarded([&] {
    if (!out) smld::fail_config("smld_config_default: null argument");
    *out = new smld_config{};
  });
}

smld_status smld_config_set(smld_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (!cfg || !key || !value) smld::fail_config("smld_config_set: null argument");
    smld::io::toml::Value v = smld::io::toml::parse_value_lenient(value);
    cfg->table[key] = std::move(v);
  });
}

void smld_config_close(smld_config* cfg) { delete cfg; }

smld_status smld_run_synth(smld_config* cfg, char** report_json) {
  return guarded([&] {
    if (!cfg) smld::fail_config("smld_run_synth: null config");
    emit_report(report_json, smld::pipeline::cmd_synth(smld::pipeline::parse_run_config(cfg->table)));
  });
}

smld_status smld_run_teach(smld_config* cfg, char** report_json) {
  return guarded([&] {
    if (!cfg) smld::fail_config("smld_run_teach: null config");
    emit_report(report_json, smld::pipeline::cmd_teach(smld::pipeline::parse_run_config(cfg->table)));
  });
}

smld_status smld_run_distill(smld_config* cfg, char** report_json) {
  return guarded([&] {
    if (!cfg) smld::fail_config("smld_run_distill: null config");
    emit_report(report_json,
                smld::pipeline::cmd_distill(smld::pipeline::parse_run_config(cfg->table)));
  });
}

smld_status smld_run_sweep(smld_config* cfg, char** report_json) {
  return guarded([&] {
    if (!cfg) smld::fail_config("smld_run_sweep: null config");
    emit_report(report_json, smld::pipeline::cmd_sweep(smld::pipeline::parse_run_config(cfg->table)));
  });
}

smld_status smld_run_eval(const char* checkpoint_path, const char* dataset_csv,
                          const char* out_dir, char** report_json) {
  return guarded([&] {
    if (!checkpoint_path || !dataset_csv) smld::fail_config("smld_run_eval: null argument");
    emit_report(report_json, smld::pipeline::cmd_eval(checkpoint_path, dataset_csv,
                                                      out_dir ? out_dir : ""));
  });
}

void smld_free_string(char* s) { std::free(s); }

}  // extern "C"
