#pragma once

#include <cstdint>
#include <vector>

#include "smld/data/dataset.hpp"
#include "smld/metrics/metrics.hpp"
#include "smld/nn/model.hpp"

namespace smld::distill {

struct DistillConfig {
  double lambda = 1.0;  // soft-target weight
  double tau = 4.0;     // temperature
  double gamma = 1.0;   // hardness factor for the conditional target
  std::vector<int> stage_epochs;  // per-stage budget; last entry repeats
  int finetune_epochs = 5;
  double lr = 1e-4;
  int batch_size = 256;
  bool enable_stage = true;
  bool enable_memory = true;
  bool enable_logits = true;
  bool early_stop = true;  // stage phase only; fine-tune epochs run exactly
  uint64_t seed = 0;
};

void validate_distill_config(const DistillConfig& cfg);

struct TeacherConfig {
  int epochs = 30;
  double lr = 1e-4;
  int batch_size = 256;
  uint64_t seed = 0;
};

struct EpochStats {
  double train_loss = 0;
  double val_accuracy = 0;
  double val_f1 = 0;
  std::vector<double> q_hat;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<std::vector<double>> stage_loss_curves;  // per paired stage
  std::vector<double> stage_final_loss;
  int best_epoch = -1;  // teacher phase: epoch whose weights were kept
  double final_val_accuracy = 0;
  double final_val_f1 = 0;
  // fine-tune phase: the pre-search ensemble and each head evaluated alone
  double ensemble_val_accuracy = 0;
  std::vector<double> per_head_val_accuracy;
};

struct TrainData {
  std::vector<data::SensorWindow> train;
  std::vector<data::SensorWindow> val;
  data::DatasetMeta meta;
};

// Supervised training of backbone + head ensemble (importance included) on
// the composed response; the best-validation-accuracy weights are kept.
TrainReport train_teacher(nn::Network& net, const TrainData& data, const TeacherConfig& cfg);

// Algorithm "stage distillation": for each stage i in order, trains every
// student parameter of stages 1..i against the time-plus-frequency feature
// loss w.r.t. the frozen teacher. Labels are never read. Adam state resets
// per stage. Returns per-stage mean-loss curves.
std::vector<std::vector<double>> stage_distill(const nn::Network& teacher, nn::Network& student,
                                               const TrainData& data, const DistillConfig& cfg);

// Requires matching teacher/student stage boundary shapes; names the first
// mismatching stage.
void validate_stage_pairing(const nn::Network& teacher, const nn::Network& student);

// Deep-copies all head parameters and the importance weights. Requires
// head-by-head structural equality; names the first differing head.
void clone_memory(const nn::Network& teacher, nn::Network& student);

// Final-stage phase: optional memory clone, `finetune_epochs` of full-network
// training under the conditional logits loss (or plain hard-label CE when
// logits distillation is off), then auto-search. Returns the deployed
// single-head network; `student` is left in its fine-tuned ensemble state.
nn::Network finetune_final_stage(const nn::Network& teacher, nn::Network& student,
                                 const TrainData& data, const DistillConfig& cfg,
                                 TrainReport* report = nullptr);

// Keeps exactly the head with maximal importance (ties toward the lowest
// index) and discards the others along with the importance weights. The
// resulting network emits that head's raw logits.
nn::Network auto_search_select(const nn::Network& net);

// Single-head network wiring an arbitrary head of an ensemble.
nn::Network select_head(const nn::Network& net, int head);

metrics::ConfusionMatrix evaluate(const nn::Network& net,
                                  const std::vector<data::SensorWindow>& windows,
                                  int batch_size = 256);

int argmax_row(const Tensor<float>& logits, int row);

}  // namespace smld::distill
