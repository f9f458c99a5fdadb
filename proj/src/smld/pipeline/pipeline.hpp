#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "smld/data/csv.hpp"
#include "smld/data/scaler.hpp"
#include "smld/data/synth.hpp"
#include "smld/distill/trainer.hpp"
#include "smld/io/toml.hpp"
#include "smld/nn/model.hpp"

namespace smld::pipeline {

// Architecture template shared by teacher and student. Boundary widths and
// strides fix the stage shapes; hidden_mult/blocks_per_stage set the width
// and depth inside each stage (hidden = round(hidden_mult * boundary)).
struct ModelSpec {
  std::vector<int> stage_channels = {8, 16, 24};
  std::vector<int> stage_strides = {2, 2, 2};
  int kernel = 5;
  double hidden_mult = 0.0;  // <= 0: one conv per stage
  int blocks_per_stage = 1;
  std::vector<std::string> heads = {"linear", "hopfield"};
  int hopfield_patterns = 8;
  double hopfield_beta = 0.0;
};

struct RunConfig {
  uint64_t seed = 0;
  std::string out_dir = "out";

  std::string source = "synth";  // "synth" | "csv"
  std::string csv_path;
  int csv_window = 0;  // required for csv sources
  int csv_hop = 0;     // 0: window/2
  int declared_classes = -1;
  data::ScalerKind scaler = data::ScalerKind::Robust;
  bool scaler_fallback_zero = false;
  bool minmax_centered = false;
  double val_fraction = 0.3;

  data::SynthSpec synth;

  ModelSpec teacher_model;
  ModelSpec student_model;
  distill::TeacherConfig teacher_train{30, 1e-4, 256, 0};
  distill::DistillConfig distill;
  std::string teacher_checkpoint;  // distill/sweep input

  std::vector<double> sweep_width_multipliers = {1.0, 0.5, 0.0};
};

RunConfig parse_run_config(const io::toml::Table& table);
RunConfig load_run_config(const std::string& path);

nn::NetworkCfg build_network_cfg(const ModelSpec& spec, int in_channels, int in_len,
                                 int n_classes);

struct PreparedData {
  distill::TrainData data;
  int window_len = 0;
  int hop = 0;
  data::ScalerParams scaler;
};

// dataset -> windows -> subject split -> scaler fit on train -> scaled split
PreparedData prepare_data(const RunConfig& cfg);

// Commands. Each writes its artifacts under cfg.out_dir and returns the
// report that was also written as JSON. Reports carry no paths or timestamps
// so identical runs produce identical bytes.
nlohmann::json cmd_synth(const RunConfig& cfg);
nlohmann::json cmd_teach(const RunConfig& cfg);
nlohmann::json cmd_distill(const RunConfig& cfg);
nlohmann::json cmd_sweep(const RunConfig& cfg);
nlohmann::json cmd_eval(const std::string& checkpoint_path, const std::string& dataset_csv,
                        const std::string& out_dir);

}  // namespace smld::pipeline
