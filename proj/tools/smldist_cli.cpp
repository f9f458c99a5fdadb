// Command-line front-end. Talks to the library exclusively through the
// public C API; CLI11 and nlohmann/json are used for argument parsing and
// report pretty-printing only.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smldist/smldist.h"

namespace {

using nlohmann::json;

struct ConfigHandle {
  smld_config* cfg = nullptr;
  ~ConfigHandle() {
    if (cfg) smld_config_close(cfg);
  }
};

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string seed;
  std::string teacher;
  std::string ft_epochs;
  std::vector<std::string> ablate;
};

int fail_with(smld_status status) {
  std::fprintf(stderr, "error: %s\n", smld_last_error());
  return static_cast<int>(status);
}

int open_config(const CommonOpts& opts, ConfigHandle& handle) {
  smld_status st;
  if (!opts.config_path.empty()) {
    st = smld_config_open(opts.config_path.c_str(), &handle.cfg);
  } else {
    st = smld_config_default(&handle.cfg);
  }
  if (st != SMLD_OK) return fail_with(st);

  auto set = [&](const char* key, const std::string& value) -> int {
    smld_status s = smld_config_set(handle.cfg, key, value.c_str());
    return s == SMLD_OK ? 0 : fail_with(s);
  };
  if (!opts.seed.empty())
    if (int rc = set("run.seed", opts.seed)) return rc;
  if (!opts.out_dir.empty())
    if (int rc = set("run.out_dir", "\"" + opts.out_dir + "\"")) return rc;
  if (!opts.teacher.empty())
    if (int rc = set("distill.teacher_checkpoint", "\"" + opts.teacher + "\"")) return rc;
  if (!opts.ft_epochs.empty())
    if (int rc = set("distill.finetune_epochs", opts.ft_epochs)) return rc;
  for (const std::string& a : opts.ablate) {
    const char* key = nullptr;
    if (a == "s") key = "distill.enable_stage";
    else if (a == "m") key = "distill.enable_memory";
    else if (a == "l") key = "distill.enable_logits";
    else {
      std::fprintf(stderr, "error: --ablate expects s, m or l (got '%s')\n", a.c_str());
      return static_cast<int>(SMLD_ERROR_CONFIG);
    }
    if (int rc = set(key, "false")) return rc;
  }
  return 0;
}

void print_metric_line(const json& j, const char* acc_key, const char* f1_key) {
  if (j.contains(acc_key) && j.contains(f1_key)) {
    std::printf("  accuracy   %.4f\n", j[acc_key].get<double>());
    std::printf("  f1_macro   %.4f\n", j[f1_key].get<double>());
  }
}

void print_report(const std::string& command, char* report) {
  if (!report) return;
  json j = json::parse(report, nullptr, false);
  smld_free_string(report);
  if (j.is_discarded()) return;
  std::printf("%s finished\n", command.c_str());
  if (command == "teach" || command == "distill") {
    print_metric_line(j, "val_accuracy", "val_f1");
    const char* model_key = command == "teach" ? "model" : "deployed";
    if (j.contains(model_key)) {
      std::printf("  params     %lld\n", j[model_key]["params"].get<long long>());
      std::printf("  macs       %lld\n", j[model_key]["macs"].get<long long>());
    }
    if (command == "distill" && j.contains("mode")) {
      std::printf("  mode       %s\n", j["mode"].get<std::string>().c_str());
    }
  } else if (command == "eval") {
    print_metric_line(j, "accuracy", "f1_macro");
    std::printf("  params     %lld\n", j["params"].get<long long>());
    std::printf("  macs       %lld\n", j["macs"].get<long long>());
    std::printf("  windows    %lld\n", j["windows"].get<long long>());
  } else if (command == "sweep" && j.contains("points")) {
    std::printf("  %-8s %-10s %-10s %-10s\n", "width", "accuracy", "params", "macs");
    for (const auto& p : j["points"]) {
      std::printf("  %-8.3f %-10.4f %-10lld %-10lld\n", p["width_multiplier"].get<double>(),
                  p["val_accuracy"].get<double>(), p["params"].get<long long>(),
                  p["macs"].get<long long>());
    }
  } else if (command == "synth") {
    std::printf("  rows       %lld\n", j["rows"].get<long long>());
    std::printf("  classes    %lld\n", j["classes"].get<long long>());
  }
}

int run_command(const std::string& name, const CommonOpts& opts) {
  ConfigHandle handle;
  if (int rc = open_config(opts, handle)) return rc;
  char* report = nullptr;
  smld_status st;
  if (name == "synth") st = smld_run_synth(handle.cfg, &report);
  else if (name == "teach") st = smld_run_teach(handle.cfg, &report);
  else if (name == "distill") st = smld_run_distill(handle.cfg, &report);
  else st = smld_run_sweep(handle.cfg, &report);
  if (st != SMLD_OK) return fail_with(st);
  print_report(name, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smldist — stage/memory/logits distillation for 1-D conv classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(smld_version()));

  CommonOpts opts;
  std::string eval_checkpoint, eval_dataset;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    CLI::Option* c = cmd->add_option("--config", opts.config_path, "TOML run configuration");
    if (needs_config) c->required();
    cmd->add_option("--seed", opts.seed, "override run.seed");
    cmd->add_option("--out", opts.out_dir, "override run.out_dir");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic CSV dataset");
  add_common(synth, true);
  CLI::App* teach = app.add_subcommand("teach", "train a teacher and write teacher.ckpt");
  add_common(teach, true);
  CLI::App* distill =
      app.add_subcommand("distill", "distill a student from a teacher checkpoint");
  add_common(distill, true);
  distill->add_option("--teacher", opts.teacher, "teacher checkpoint path");
  distill->add_option("--ft-epochs", opts.ft_epochs, "fine-tune epoch count");
  distill->add_option("--ablate", opts.ablate, "disable a phase: s, m or l (repeatable)");
  CLI::App* sweep = app.add_subcommand("sweep", "distill one student per width multiplier");
  add_common(sweep, true);
  sweep->add_option("--teacher", opts.teacher, "teacher checkpoint path");
  sweep->add_option("--ft-epochs", opts.ft_epochs, "fine-tune epoch count");
  sweep->add_option("--ablate", opts.ablate, "disable a phase: s, m or l (repeatable)");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a CSV dataset");
  eval->add_option("checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval->add_option("dataset", eval_dataset, "CSV dataset")->required();
  eval->add_option("--out", opts.out_dir, "directory for eval_report.json");

  CLI11_PARSE(app, argc, argv);

  if (eval->parsed()) {
    char* report = nullptr;
    smld_status st = smld_run_eval(eval_checkpoint.c_str(), eval_dataset.c_str(),
                                   opts.out_dir.c_str(), &report);
    if (st != SMLD_OK) return fail_with(st);
    print_report("eval", report);
    return 0;
  }
  for (CLI::App* cmd : {synth, teach, distill, sweep}) {
    if (cmd->parsed()) return run_command(cmd->get_name(), opts);
  }
  return 0;
}
