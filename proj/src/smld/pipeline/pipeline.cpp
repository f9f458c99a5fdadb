#include "smld/pipeline/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "smld/core/error.hpp"
#include "smld/io/checkpoint.hpp"

namespace smld::pipeline {

namespace fs = std::filesystem;
using io::toml::Table;
using io::toml::Value;
using nlohmann::json;

namespace {

const Value* find(const Table& t, const std::string& key) {
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

std::string get_str(const Table& t, const std::string& key, const std::string& dflt) {
  const Value* v = find(t, key);
  return v ? v->as_string(key) : dflt;
}

int64_t get_int(const Table& t, const std::string& key, int64_t dflt) {
  const Value* v = find(t, key);
  return v ? v->as_int(key) : dflt;
}

double get_double(const Table& t, const std::string& key, double dflt) {
  const Value* v = find(t, key);
  return v ? v->as_double(key) : dflt;
}

bool get_bool(const Table& t, const std::string& key, bool dflt) {
  const Value* v = find(t, key);
  return v ? v->as_bool(key) : dflt;
}

std::vector<int> get_int_vec(const Table& t, const std::string& key, std::vector<int> dflt) {
  const Value* v = find(t, key);
  if (!v) return dflt;
  std::vector<int> out;
  for (int64_t x : v->as_int_array(key)) out.push_back(static_cast<int>(x));
  return out;
}

ModelSpec parse_model_spec(const Table& t, const std::string& section, const ModelSpec& dflt) {
  ModelSpec m = dflt;
  m.stage_channels = get_int_vec(t, section + ".stage_channels", m.stage_channels);
  m.stage_strides = get_int_vec(t, section + ".stage_strides", m.stage_strides);
  m.kernel = static_cast<int>(get_int(t, section + ".kernel", m.kernel));
  m.hidden_mult = get_double(t, section + ".hidden_mult", m.hidden_mult);
  m.blocks_per_stage = static_cast<int>(get_int(t, section + ".blocks_per_stage", m.blocks_per_stage));
  if (const Value* v = find(t, section + ".heads")) {
    m.heads = v->as_string_array(section + ".heads");
  }
  m.hopfield_patterns =
      static_cast<int>(get_int(t, section + ".hopfield_patterns", m.hopfield_patterns));
  m.hopfield_beta = get_double(t, section + ".hopfield_beta", m.hopfield_beta);
  if (m.stage_channels.empty()) fail_config("field " + section + ".stage_channels: empty");
  if (m.stage_strides.size() != m.stage_channels.size()) {
    fail_config("field " + section + ".stage_strides: must match stage_channels length");
  }
  for (const std::string& h : m.heads) {
    if (h != "linear" && h != "hopfield") {
      fail_config("field " + section + ".heads: unknown head kind '" + h + "'");
    }
  }
  if (m.heads.empty()) fail_config("field " + section + ".heads: at least one head required");
  return m;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("report: cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) fail_data("report: write to '" + path + "' failed");
}

json epochs_to_json(const std::vector<distill::EpochStats>& epochs) {
  json arr = json::array();
  for (size_t i = 0; i < epochs.size(); ++i) {
    const distill::EpochStats& e = epochs[i];
    arr.push_back({{"epoch", i},
                   {"train_loss", e.train_loss},
                   {"val_accuracy", e.val_accuracy},
                   {"val_f1", e.val_f1},
                   {"q_hat", e.q_hat}});
  }
  return arr;
}

json confusion_to_json(const metrics::ConfusionMatrix& cm) {
  json rows = json::array();
  for (int i = 0; i < cm.n_classes(); ++i) {
    json row = json::array();
    for (int j = 0; j < cm.n_classes(); ++j) row.push_back(cm.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

json model_cost_json(const nn::Network& net) {
  return {{"params", net.parameter_count()}, {"macs", metrics::macs_estimate(net.cfg())}};
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail_data("cannot create output directory '" + dir + "': " + ec.message());
}

data::ScalerKind parse_scaler_kind(const std::string& s) {
  if (s == "robust") return data::ScalerKind::Robust;
  if (s == "minmax") return data::ScalerKind::MinMax;
  if (s == "none") return data::ScalerKind::None;
  fail_config("field dataset.scaler: unknown scaler '" + s + "'");
}

// Shared by distill and sweep: full pipeline for one student on prepared data.
struct DistillOutcome {
  nn::Network deployed;
  distill::TrainReport report;
  std::vector<std::vector<double>> stage_curves;
  nn::Network ensemble_student;
};

DistillOutcome run_distillation(const nn::Network& teacher, const nn::NetworkCfg& student_cfg,
                                const PreparedData& prep, const distill::DistillConfig& dcfg,
                                uint64_t init_seed) {
  nn::Network student(student_cfg);
  student.init_params(init_seed + 1);
  std::vector<std::vector<double>> curves;
  if (dcfg.enable_stage) {
    curves = distill::stage_distill(teacher, student, prep.data, dcfg);
  } else {
    distill::validate_stage_pairing(teacher, student);
  }
  distill::TrainReport report;
  nn::Network deployed = distill::finetune_final_stage(teacher, student, prep.data, dcfg, &report);
  return {std::move(deployed), std::move(report), std::move(curves), std::move(student)};
}

json distill_report_json(const DistillOutcome& out, const distill::DistillConfig& dcfg,
                         const PreparedData& prep) {
  json j;
  j["command"] = "distill";
  j["flags"] = {{"stage", dcfg.enable_stage},
                {"memory", dcfg.enable_memory},
                {"logits", dcfg.enable_logits}};
  if (!dcfg.enable_stage && !dcfg.enable_memory && !dcfg.enable_logits) {
    j["mode"] = "raw-student-equivalent fine-tune";
  } else {
    j["mode"] = "distillation";
  }
  j["hyper"] = {{"lambda", dcfg.lambda}, {"tau", dcfg.tau},     {"gamma", dcfg.gamma},
                {"lr", dcfg.lr},         {"batch", dcfg.batch_size},
                {"finetune_epochs", dcfg.finetune_epochs}};
  j["stage_loss_curves"] = out.stage_curves;
  j["finetune"] = epochs_to_json(out.report.epochs);
  j["val_accuracy"] = out.report.final_val_accuracy;
  j["val_f1"] = out.report.final_val_f1;
  j["ensemble_val_accuracy"] = out.report.ensemble_val_accuracy;
  j["per_head_val_accuracy"] = out.report.per_head_val_accuracy;
  j["deployed"] = model_cost_json(out.deployed);
  j["deployed_heads"] = out.deployed.cfg().heads.size();
  j["dataset"] = {{"train_windows", prep.data.train.size()},
                  {"val_windows", prep.data.val.size()},
                  {"channels", prep.data.meta.channels},
                  {"window_len", prep.data.meta.window_len},
                  {"n_classes", prep.data.meta.n_classes}};
  return j;
}

}  // namespace

RunConfig parse_run_config(const Table& t) {
  RunConfig cfg;
  cfg.seed = static_cast<uint64_t>(get_int(t, "run.seed", 0));
  cfg.out_dir = get_str(t, "run.out_dir", "out");

  cfg.source = get_str(t, "dataset.source", "synth");
  if (cfg.source != "synth" && cfg.source != "csv") {
    fail_config("field dataset.source: expected \"synth\" or \"csv\"");
  }
  cfg.csv_path = get_str(t, "dataset.csv_path", "");
  cfg.csv_window = static_cast<int>(get_int(t, "dataset.window", 0));
  cfg.csv_hop = static_cast<int>(get_int(t, "dataset.hop", 0));
  cfg.declared_classes = static_cast<int>(get_int(t, "dataset.classes", -1));
  cfg.scaler = parse_scaler_kind(get_str(t, "dataset.scaler", "robust"));
  cfg.scaler_fallback_zero = get_bool(t, "dataset.scaler_fallback_zero", false);
  cfg.minmax_centered = get_bool(t, "dataset.minmax_centered", false);
  cfg.val_fraction = get_double(t, "dataset.val_fraction", 0.3);
  if (cfg.val_fraction <= 0 || cfg.val_fraction >= 1) {
    fail_config("field dataset.val_fraction: must be in (0,1)");
  }
  if (cfg.source == "csv") {
    if (cfg.csv_path.empty()) fail_config("field dataset.csv_path: required for csv sources");
    if (cfg.csv_window < 1) fail_config("field dataset.window: required for csv sources");
  }

  cfg.synth.classes = static_cast<int>(get_int(t, "synth.classes", cfg.synth.classes));
  cfg.synth.subjects = static_cast<int>(get_int(t, "synth.subjects", cfg.synth.subjects));
  cfg.synth.channels = static_cast<int>(get_int(t, "synth.channels", cfg.synth.channels));
  cfg.synth.sample_rate_hz = get_double(t, "synth.sample_rate_hz", cfg.synth.sample_rate_hz);
  cfg.synth.window_seconds = get_double(t, "synth.window_seconds", cfg.synth.window_seconds);
  cfg.synth.windows_per_class_per_subject = static_cast<int>(
      get_int(t, "synth.windows_per_class_per_subject", cfg.synth.windows_per_class_per_subject));
  if (const Value* v = find(t, "synth.class_frequencies_hz")) {
    cfg.synth.class_freqs_hz = v->as_double_array("synth.class_frequencies_hz");
  }
  cfg.synth.noise_sigma = get_double(t, "synth.noise_sigma", cfg.synth.noise_sigma);
  cfg.synth.trend_slope = get_double(t, "synth.trend_slope", cfg.synth.trend_slope);
  cfg.synth.amplitude = get_double(t, "synth.amplitude", cfg.synth.amplitude);
  cfg.synth.hop = static_cast<int>(get_int(t, "synth.hop", cfg.synth.hop));
  if (cfg.source == "synth") data::validate_synth_spec(cfg.synth);

  ModelSpec teacher_dflt;
  teacher_dflt.hidden_mult = 4.0;
  teacher_dflt.blocks_per_stage = 2;
  cfg.teacher_model = parse_model_spec(t, "teacher", teacher_dflt);
  ModelSpec student_dflt;
  student_dflt.stage_channels = cfg.teacher_model.stage_channels;
  student_dflt.stage_strides = cfg.teacher_model.stage_strides;
  student_dflt.kernel = cfg.teacher_model.kernel;
  student_dflt.heads = cfg.teacher_model.heads;
  student_dflt.hopfield_patterns = cfg.teacher_model.hopfield_patterns;
  student_dflt.hopfield_beta = cfg.teacher_model.hopfield_beta;
  cfg.student_model = parse_model_spec(t, "student", student_dflt);

  cfg.teacher_train.epochs = static_cast<int>(get_int(t, "teacher.epochs", 30));
  cfg.teacher_train.lr = get_double(t, "teacher.lr", 1e-4);
  cfg.teacher_train.batch_size = static_cast<int>(get_int(t, "teacher.batch", 256));
  if (cfg.teacher_train.epochs < 1) fail_config("field teacher.epochs: must be >= 1");

  distill::DistillConfig& d = cfg.distill;
  d.lambda = get_double(t, "distill.lambda", d.lambda);
  d.tau = get_double(t, "distill.tau", d.tau);
  d.gamma = get_double(t, "distill.gamma", d.gamma);
  d.stage_epochs = get_int_vec(t, "distill.stage_epochs", {8});
  d.finetune_epochs = static_cast<int>(get_int(t, "distill.finetune_epochs", d.finetune_epochs));
  d.lr = get_double(t, "distill.lr", d.lr);
  d.batch_size = static_cast<int>(get_int(t, "distill.batch", d.batch_size));
  d.enable_stage = get_bool(t, "distill.enable_stage", true);
  d.enable_memory = get_bool(t, "distill.enable_memory", true);
  d.enable_logits = get_bool(t, "distill.enable_logits", true);
  d.early_stop = get_bool(t, "distill.early_stop", true);
  cfg.teacher_checkpoint = get_str(t, "distill.teacher_checkpoint", "");
  distill::validate_distill_config(d);

  if (const Value* v = find(t, "sweep.width_multipliers")) {
    cfg.sweep_width_multipliers = v->as_double_array("sweep.width_multipliers");
    if (cfg.sweep_width_multipliers.empty()) {
      fail_config("field sweep.width_multipliers: empty");
    }
  }

  cfg.synth.seed = cfg.seed;
  cfg.teacher_train.seed = cfg.seed;
  cfg.distill.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(io::toml::parse_file(path));
}

nn::NetworkCfg build_network_cfg(const ModelSpec& spec, int in_channels, int in_len,
                                 int n_classes) {
  nn::NetworkCfg cfg;
  cfg.in_channels = in_channels;
  cfg.in_len = in_len;
  cfg.n_classes = n_classes;
  for (size_t i = 0; i < spec.stage_channels.size(); ++i) {
    nn::StageCfg stage;
    const int out_ch = spec.stage_channels[i];
    const int stride = spec.stage_strides[i];
    const int hidden = static_cast<int>(std::lround(spec.hidden_mult * out_ch));
    if (spec.blocks_per_stage <= 1 || hidden < 1) {
      stage.blocks.push_back({out_ch, spec.kernel, stride});
    } else {
      stage.blocks.push_back({hidden, spec.kernel, stride});
      for (int b = 2; b < spec.blocks_per_stage; ++b) {
        stage.blocks.push_back({hidden, spec.kernel, 1});
      }
      stage.blocks.push_back({out_ch, spec.kernel, 1});
    }
    cfg.stages.push_back(std::move(stage));
  }
  for (const std::string& h : spec.heads) {
    nn::HeadCfg head;
    head.kind = h == "hopfield" ? nn::HeadKind::Hopfield : nn::HeadKind::Linear;
    head.patterns = spec.hopfield_patterns;
    head.beta = spec.hopfield_beta;
    cfg.heads.push_back(head);
  }
  cfg.ensemble = true;
  nn::validate_network_cfg(cfg);
  return cfg;
}

PreparedData prepare_data(const RunConfig& cfg) {
  std::vector<data::SensorWindow> windows;
  int channels = 0, window = 0, hop = 0, n_classes = 0;
  if (cfg.source == "synth") {
    data::SynthSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    data::SynthResult synth = data::synth_generate(spec);
    windows = std::move(synth.windows);
    channels = synth.meta.channels;
    window = synth.meta.window_len;
    hop = synth.hop;
    n_classes = synth.meta.n_classes;
  } else {
    data::CsvSchema schema;
    schema.declared_classes = cfg.declared_classes;
    std::vector<data::LabeledStream> streams = data::load_csv_dataset(cfg.csv_path, schema);
    window = cfg.csv_window;
    hop = cfg.csv_hop > 0 ? cfg.csv_hop : std::max(1, window / 2);
    n_classes = cfg.declared_classes > 0 ? cfg.declared_classes : data::max_label(streams) + 1;
    channels = streams.front().channels();
    for (const data::LabeledStream& s : streams) {
      std::vector<data::SensorWindow> w = data::window_signal(s, window, hop);
      windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                     std::make_move_iterator(w.end()));
    }
  }
  if (windows.empty()) fail_data("dataset: no windows (streams shorter than the window?)");

  PreparedData prep;
  auto [train, val] = data::split_by_subject(windows, cfg.val_fraction, cfg.seed);
  prep.scaler = data::fit_scaler(train, cfg.scaler, cfg.scaler_fallback_zero, cfg.minmax_centered);
  data::apply_scaler(train, prep.scaler);
  data::apply_scaler(val, prep.scaler);
  prep.data.train = std::move(train);
  prep.data.val = std::move(val);
  prep.data.meta.channels = channels;
  prep.data.meta.window_len = window;
  prep.data.meta.n_classes = n_classes;
  prep.window_len = window;
  prep.hop = hop;
  return prep;
}

json cmd_synth(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  data::SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  data::SynthResult synth = data::synth_generate(spec);
  const std::string csv_path = (fs::path(cfg.out_dir) / "synth.csv").string();
  data::write_csv(csv_path, synth.streams);

  json manifest;
  manifest["command"] = "synth";
  manifest["seed"] = cfg.seed;
  manifest["classes"] = spec.classes;
  manifest["subjects"] = spec.subjects;
  manifest["channels"] = spec.channels;
  manifest["sample_rate_hz"] = spec.sample_rate_hz;
  manifest["window_len"] = synth.meta.window_len;
  manifest["hop"] = synth.hop;
  manifest["class_frequencies_hz"] = synth.class_freqs_hz;
  manifest["noise_sigma"] = spec.noise_sigma;
  manifest["trend_slope"] = spec.trend_slope;
  int64_t rows = 0;
  for (const auto& s : synth.streams) rows += s.samples();
  manifest["rows"] = rows;
  write_json_file((fs::path(cfg.out_dir) / "synth_manifest.json").string(), manifest);
  return manifest;
}

json cmd_teach(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  PreparedData prep = prepare_data(cfg);
  nn::NetworkCfg net_cfg = build_network_cfg(cfg.teacher_model, prep.data.meta.channels,
                                             prep.window_len, prep.data.meta.n_classes);
  nn::Network teacher(net_cfg);
  teacher.init_params(cfg.seed);
  distill::TeacherConfig tcfg = cfg.teacher_train;
  tcfg.seed = cfg.seed;
  distill::TrainReport report = train_teacher(teacher, prep.data, tcfg);

  json metrics_snapshot = {{"val_accuracy", report.final_val_accuracy},
                           {"val_f1", report.final_val_f1}};
  io::save_model((fs::path(cfg.out_dir) / "teacher.ckpt").string(), teacher, prep.scaler,
                 prep.data.meta, prep.hop, metrics_snapshot);

  json j;
  j["command"] = "teach";
  j["seed"] = cfg.seed;
  j["epochs"] = epochs_to_json(report.epochs);
  j["best_epoch"] = report.best_epoch;
  j["val_accuracy"] = report.final_val_accuracy;
  j["val_f1"] = report.final_val_f1;
  j["per_head_val_accuracy"] = report.per_head_val_accuracy;
  j["model"] = model_cost_json(teacher);
  j["dataset"] = {{"train_windows", prep.data.train.size()},
                  {"val_windows", prep.data.val.size()},
                  {"channels", prep.data.meta.channels},
                  {"window_len", prep.data.meta.window_len},
                  {"n_classes", prep.data.meta.n_classes}};
  write_json_file((fs::path(cfg.out_dir) / "teach_report.json").string(), j);
  return j;
}

namespace {

nn::Network load_teacher_for(const RunConfig& cfg, const PreparedData& prep) {
  if (cfg.teacher_checkpoint.empty()) {
    fail_config("field distill.teacher_checkpoint: required (or pass --teacher)");
  }
  io::ModelBundle bundle = io::load_model(cfg.teacher_checkpoint);
  if (bundle.dataset.channels != prep.data.meta.channels ||
      bundle.dataset.window_len != prep.data.meta.window_len ||
      bundle.dataset.n_classes != prep.data.meta.n_classes) {
    fail_data("teacher checkpoint was trained on a different dataset shape");
  }
  return std::move(bundle.net);
}

}  // namespace

json cmd_distill(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  PreparedData prep = prepare_data(cfg);
  nn::Network teacher = load_teacher_for(cfg, prep);
  nn::NetworkCfg student_cfg = build_network_cfg(cfg.student_model, prep.data.meta.channels,
                                                 prep.window_len, prep.data.meta.n_classes);
  DistillOutcome out = run_distillation(teacher, student_cfg, prep, cfg.distill, cfg.seed);

  json metrics_snapshot = {{"val_accuracy", out.report.final_val_accuracy},
                           {"val_f1", out.report.final_val_f1}};
  io::save_model((fs::path(cfg.out_dir) / "student.ckpt").string(), out.deployed, prep.scaler,
                 prep.data.meta, prep.hop, metrics_snapshot);

  json j = distill_report_json(out, cfg.distill, prep);
  j["seed"] = cfg.seed;
  write_json_file((fs::path(cfg.out_dir) / "distill_report.json").string(), j);
  return j;
}

json cmd_sweep(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  PreparedData prep = prepare_data(cfg);
  nn::Network teacher = load_teacher_for(cfg, prep);

  json points = json::array();
  for (double mult : cfg.sweep_width_multipliers) {
    ModelSpec spec = cfg.student_model;
    spec.hidden_mult = cfg.teacher_model.hidden_mult * mult;
    spec.blocks_per_stage = mult > 0 ? cfg.teacher_model.blocks_per_stage : 1;
    nn::NetworkCfg student_cfg = build_network_cfg(spec, prep.data.meta.channels,
                                                   prep.window_len, prep.data.meta.n_classes);
    DistillOutcome out = run_distillation(teacher, student_cfg, prep, cfg.distill, cfg.seed);

    char name[64];
    std::snprintf(name, sizeof name, "student_w%.3f.ckpt", mult);
    json metrics_snapshot = {{"val_accuracy", out.report.final_val_accuracy},
                             {"val_f1", out.report.final_val_f1}};
    io::save_model((fs::path(cfg.out_dir) / name).string(), out.deployed, prep.scaler,
                   prep.data.meta, prep.hop, metrics_snapshot);
    points.push_back({{"width_multiplier", mult},
                      {"checkpoint", name},
                      {"val_accuracy", out.report.final_val_accuracy},
                      {"val_f1", out.report.final_val_f1},
                      {"params", out.deployed.parameter_count()},
                      {"macs", metrics::macs_estimate(out.deployed.cfg())}});
  }
  json j;
  j["command"] = "sweep";
  j["seed"] = cfg.seed;
  j["points"] = points;
  j["teacher"] = model_cost_json(teacher);
  write_json_file((fs::path(cfg.out_dir) / "sweep_report.json").string(), j);
  return j;
}

json cmd_eval(const std::string& checkpoint_path, const std::string& dataset_csv,
              const std::string& out_dir) {
  io::ModelBundle bundle = io::load_model(checkpoint_path);
  data::CsvSchema schema;
  schema.expected_channels = bundle.dataset.channels;
  schema.declared_classes = bundle.dataset.n_classes;
  std::vector<data::LabeledStream> streams = data::load_csv_dataset(dataset_csv, schema);

  const int hop = bundle.window_hop > 0 ? bundle.window_hop : std::max(1, bundle.dataset.window_len / 2);
  std::vector<data::SensorWindow> windows;
  for (const data::LabeledStream& s : streams) {
    std::vector<data::SensorWindow> w = data::window_signal(s, bundle.dataset.window_len, hop);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
  }
  if (windows.empty()) fail_data("eval: dataset produced no windows");
  data::apply_scaler(windows, bundle.scaler);

  metrics::ConfusionMatrix cm = distill::evaluate(bundle.net, windows);
  std::vector<metrics::ClassScore> scores = metrics::per_class_scores(cm);
  json per_class = json::array();
  for (const metrics::ClassScore& s : scores) {
    per_class.push_back({{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
  }

  json j;
  j["accuracy"] = metrics::accuracy(cm);
  j["f1_macro"] = metrics::f1_macro(cm);
  j["confusion"] = confusion_to_json(cm);
  j["params"] = bundle.net.parameter_count();
  j["macs"] = metrics::macs_estimate(bundle.net.cfg());
  j["per_class"] = per_class;
  j["windows"] = windows.size();
  j["checkpoint_metrics"] = bundle.metrics;
  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    write_json_file((fs::path(out_dir) / "eval_report.json").string(), j);
  }
  return j;
}

}  // namespace smld::pipeline
