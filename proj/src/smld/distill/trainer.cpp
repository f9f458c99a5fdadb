#include "smld/distill/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "smld/core/adam.hpp"
#include "smld/core/rng.hpp"
#include "smld/distill/losses.hpp"

namespace smld::distill {

using nn::Real;

namespace {

std::vector<int> shuffled_order(int count, Rng& rng) {
  std::vector<int> order(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  return order;
}

double scalar_loss(Tape<Real>& tape, Val<Real> loss) {
  double v = static_cast<double>(tape.value(loss).v[0]);
  if (!std::isfinite(v)) fail_numeric("training: loss became non-finite");
  return v;
}

std::vector<ParamGrad> collect_grads(nn::Network& net, Tape<Real>& tape,
                                     const std::map<std::string, Val<Real>>& bound,
                                     const std::vector<std::string>& names,
                                     std::vector<Tensor<Real>>& grad_store) {
  grad_store.clear();
  grad_store.reserve(names.size());
  std::vector<ParamGrad> entries;
  entries.reserve(names.size());
  for (const std::string& name : names) {
    auto it = bound.find(name);
    if (it == bound.end()) continue;
    grad_store.push_back(tape.grad(it->second));
    entries.push_back({name, &net.param(name), &grad_store.back()});
  }
  return entries;
}

void record_val(const nn::Network& net, const TrainData& data, int batch, EpochStats& stats) {
  metrics::ConfusionMatrix cm = evaluate(net, data.val, batch);
  stats.val_accuracy = metrics::accuracy(cm);
  stats.val_f1 = metrics::f1_macro(cm);
  stats.q_hat = net.head_importance();
}

std::map<std::string, Tensor<Real>> snapshot_params(const nn::Network& net) {
  std::map<std::string, Tensor<Real>> snap;
  for (const std::string& n : net.param_names()) snap.emplace(n, net.param(n));
  return snap;
}

void restore_params(nn::Network& net, const std::map<std::string, Tensor<Real>>& snap) {
  for (const auto& [name, t] : snap) net.param(name) = t;
}

// Teacher stage features (or logits) never change: compute once per stage
// over the training set and gather per batch afterwards.
std::vector<Tensor<Real>> precompute_stage_features(const nn::Network& teacher,
                                                    const std::vector<data::SensorWindow>& windows,
                                                    int upto_stage, int batch_size) {
  std::vector<Tensor<Real>> features(windows.size());
  auto batches = data::make_batches(static_cast<int>(windows.size()), batch_size);
  for (const auto& idx : batches) {
    Tensor<Real> x = data::gather_batch(windows, idx);
    std::vector<Tensor<Real>> feats = teacher.stage_features_eval(x, upto_stage);
    const Tensor<Real>& last = feats.back();
    const int c = last.dim(1), l = last.dim(2);
    for (size_t b = 0; b < idx.size(); ++b) {
      Tensor<Real> one({c, l});
      std::copy(last.v.begin() + static_cast<int64_t>(b) * c * l,
                last.v.begin() + static_cast<int64_t>(b + 1) * c * l, one.v.begin());
      features[static_cast<size_t>(idx[b])] = std::move(one);
    }
  }
  return features;
}

std::vector<Tensor<Real>> precompute_logits(const nn::Network& teacher,
                                            const std::vector<data::SensorWindow>& windows,
                                            int batch_size) {
  std::vector<Tensor<Real>> logits(windows.size());
  auto batches = data::make_batches(static_cast<int>(windows.size()), batch_size);
  for (const auto& idx : batches) {
    Tensor<Real> x = data::gather_batch(windows, idx);
    Tensor<Real> y = teacher.logits(x);
    const int c = y.dim(1);
    for (size_t b = 0; b < idx.size(); ++b) {
      Tensor<Real> one({1, c});
      std::copy(y.v.begin() + static_cast<int64_t>(b) * c,
                y.v.begin() + static_cast<int64_t>(b + 1) * c, one.v.begin());
      logits[static_cast<size_t>(idx[b])] = std::move(one);
    }
  }
  return logits;
}

Tensor<Real> gather_rows(const std::vector<Tensor<Real>>& rows, const std::vector<int>& idx) {
  const int c = rows[static_cast<size_t>(idx[0])].dim(1);
  Tensor<Real> out({static_cast<int>(idx.size()), c});
  for (size_t b = 0; b < idx.size(); ++b) {
    const Tensor<Real>& src = rows[static_cast<size_t>(idx[b])];
    std::copy(src.v.begin(), src.v.end(), out.v.begin() + static_cast<int64_t>(b) * c);
  }
  return out;
}

Tensor<Real> gather_features(const std::vector<Tensor<Real>>& feats, const std::vector<int>& idx) {
  const Tensor<Real>& first = feats[static_cast<size_t>(idx[0])];
  const int c = first.dim(0), l = first.dim(1);
  Tensor<Real> out({static_cast<int>(idx.size()), c, l});
  for (size_t b = 0; b < idx.size(); ++b) {
    const Tensor<Real>& src = feats[static_cast<size_t>(idx[b])];
    std::copy(src.v.begin(), src.v.end(), out.v.begin() + static_cast<int64_t>(b) * c * l);
  }
  return out;
}

}  // namespace

void validate_distill_config(const DistillConfig& cfg) {
  if (cfg.tau <= 0) fail_config("distill: tau must be positive");
  if (cfg.lambda < 0) fail_config("distill: lambda must be >= 0");
  if (cfg.finetune_epochs < 0) fail_config("distill: finetune_epochs must be >= 0");
  if (cfg.batch_size < 1) fail_config("distill: batch_size must be >= 1");
  if (cfg.lr <= 0) fail_config("distill: lr must be positive");
}

int argmax_row(const Tensor<float>& logits, int row) {
  int best = 0;
  for (int j = 1; j < logits.dim(1); ++j) {
    if (logits.at(row, j) > logits.at(row, best)) best = j;
  }
  return best;
}

metrics::ConfusionMatrix evaluate(const nn::Network& net,
                                  const std::vector<data::SensorWindow>& windows,
                                  int batch_size) {
  metrics::ConfusionMatrix cm(net.cfg().n_classes);
  auto batches = data::make_batches(static_cast<int>(windows.size()), batch_size);
  for (const auto& idx : batches) {
    Tensor<Real> x = data::gather_batch(windows, idx);
    Tensor<Real> y = net.logits(x);
    for (size_t b = 0; b < idx.size(); ++b) {
      cm.add(windows[static_cast<size_t>(idx[b])].label, argmax_row(y, static_cast<int>(b)));
    }
  }
  return cm;
}

TrainReport train_teacher(nn::Network& net, const TrainData& data, const TeacherConfig& cfg) {
  if (data.train.empty() || data.val.empty()) fail_data("train_teacher: empty split");
  TrainReport report;
  Adam adam({cfg.lr});
  Rng shuffle_rng(cfg.seed, 21);
  const int n_train = static_cast<int>(data.train.size());
  const std::vector<std::string> all_names(net.param_names().begin(), net.param_names().end());
  std::map<std::string, Tensor<Real>> best;
  double best_acc = -1.0;
  std::vector<Tensor<Real>> grad_store;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = shuffled_order(n_train, shuffle_rng);
    auto batches = data::make_batches(n_train, cfg.batch_size, &order);
    double loss_sum = 0;
    for (const auto& idx : batches) {
      Tensor<Real> x = data::gather_batch(data.train, idx);
      std::vector<int> labels = data::gather_labels(data.train, idx);
      Tape<Real> tape;
      nn::Network::Bound bound = net.forward(tape, x, 0, true, /*trainable=*/true);
      Val<Real> loss = tape.soft_cross_entropy(
          bound.output, one_hot<Real>(labels, net.cfg().n_classes));
      loss_sum += scalar_loss(tape, loss) * static_cast<double>(idx.size());
      tape.backward(loss);
      adam.step(collect_grads(net, tape, bound.params, all_names, grad_store));
    }
    EpochStats stats;
    stats.train_loss = loss_sum / n_train;
    record_val(net, data, cfg.batch_size, stats);
    if (stats.val_accuracy > best_acc) {
      best_acc = stats.val_accuracy;
      best = snapshot_params(net);
      report.best_epoch = epoch;
    }
    report.epochs.push_back(std::move(stats));
  }
  if (!best.empty()) restore_params(net, best);
  metrics::ConfusionMatrix cm = evaluate(net, data.val, cfg.batch_size);
  report.final_val_accuracy = metrics::accuracy(cm);
  report.final_val_f1 = metrics::f1_macro(cm);
  report.ensemble_val_accuracy = report.final_val_accuracy;
  for (size_t h = 0; h < net.cfg().heads.size(); ++h) {
    nn::Network solo = select_head(net, static_cast<int>(h));
    report.per_head_val_accuracy.push_back(
        metrics::accuracy(evaluate(solo, data.val, cfg.batch_size)));
  }
  return report;
}

void validate_stage_pairing(const nn::Network& teacher, const nn::Network& student) {
  const nn::NetworkCfg& tc = teacher.cfg();
  const nn::NetworkCfg& sc = student.cfg();
  if (tc.in_channels != sc.in_channels || tc.in_len != sc.in_len) {
    fail_data("stage pairing: teacher input [" + std::to_string(tc.in_channels) + "," +
              std::to_string(tc.in_len) + "] vs student [" + std::to_string(sc.in_channels) +
              "," + std::to_string(sc.in_len) + "]");
  }
  if (tc.stages.size() != sc.stages.size()) {
    fail_data("stage pairing: teacher has " + std::to_string(tc.stages.size()) +
              " stages, student has " + std::to_string(sc.stages.size()));
  }
  std::vector<nn::StageShape> ts = nn::stage_shapes(tc);
  std::vector<nn::StageShape> ss = nn::stage_shapes(sc);
  for (size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] == ss[i])) {
      fail_data("stage pairing: stage " + std::to_string(i) + " boundary (" +
                std::to_string(ts[i].channels) + "," + std::to_string(ts[i].length) +
                ") vs (" + std::to_string(ss[i].channels) + "," + std::to_string(ss[i].length) +
                ")");
    }
  }
}

std::vector<std::vector<double>> stage_distill(const nn::Network& teacher, nn::Network& student,
                                               const TrainData& data, const DistillConfig& cfg) {
  validate_distill_config(cfg);
  validate_stage_pairing(teacher, student);
  if (data.train.empty()) fail_data("stage_distill: no training windows");
  const int n_stages = static_cast<int>(student.cfg().stages.size());
  const int n_train = static_cast<int>(data.train.size());
  std::vector<std::vector<double>> curves;

  for (int stage = 1; stage <= n_stages; ++stage) {
    const int budget = cfg.stage_epochs.empty()
                           ? 0
                           : cfg.stage_epochs[std::min<size_t>(static_cast<size_t>(stage) - 1,
                                                               cfg.stage_epochs.size() - 1)];
    std::vector<double> curve;
    if (budget <= 0) {
      curves.push_back(std::move(curve));
      continue;
    }
    std::vector<Tensor<Real>> cache =
        precompute_stage_features(teacher, data.train, stage, cfg.batch_size);
    Adam adam({cfg.lr});  // fresh optimizer state per stage
    Rng shuffle_rng(cfg.seed, 100 + static_cast<uint64_t>(stage));
    std::vector<std::string> names = student.stage_param_names(stage);
    std::vector<Tensor<Real>> grad_store;

    for (int epoch = 0; epoch < budget; ++epoch) {
      std::vector<int> order = shuffled_order(n_train, shuffle_rng);
      auto batches = data::make_batches(n_train, cfg.batch_size, &order);
      double loss_sum = 0;
      for (const auto& idx : batches) {
        Tensor<Real> x = data::gather_batch(data.train, idx);
        Tape<Real> tape;
        nn::Network::Bound bound =
            student.forward(tape, x, stage, /*with_heads=*/false, /*trainable=*/true);
        Val<Real> teacher_feat = tape.constant(gather_features(cache, idx));
        Val<Real> loss = stage_loss(tape, bound.stage_features.back(), teacher_feat);
        loss_sum += scalar_loss(tape, loss) * static_cast<double>(idx.size());
        tape.backward(loss);
        adam.step(collect_grads(student, tape, bound.params, names, grad_store));
      }
      curve.push_back(loss_sum / n_train);
      // stop when the mean loss improved by < 1e-4 relative over a 3-epoch window
      if (cfg.early_stop && curve.size() >= 4) {
        double past = curve[curve.size() - 4];
        double now = curve.back();
        if ((past - now) / std::max(past, 1e-12) < 1e-4) break;
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

void clone_memory(const nn::Network& teacher, nn::Network& student) {
  const nn::NetworkCfg& tc = teacher.cfg();
  const nn::NetworkCfg& sc = student.cfg();
  const int td = teacher.pooled_dim();
  const int sd = student.pooled_dim();
  if (td != sd) {
    fail_data("clone_memory: pooled dims differ (teacher " + std::to_string(td) + ", student " +
              std::to_string(sd) + ")");
  }
  if (tc.heads.size() != sc.heads.size()) {
    fail_data("clone_memory: teacher has " + std::to_string(tc.heads.size()) +
              " heads, student has " + std::to_string(sc.heads.size()));
  }
  if (!tc.ensemble || !sc.ensemble) {
    fail_data("clone_memory: both networks must carry head importance weights");
  }
  auto kind_name = [](nn::HeadKind k) { return k == nn::HeadKind::Linear ? "linear" : "hopfield"; };
  for (size_t h = 0; h < tc.heads.size(); ++h) {
    const nn::HeadCfg& th = tc.heads[h];
    const nn::HeadCfg& sh = sc.heads[h];
    if (th.kind != sh.kind || (th.kind == nn::HeadKind::Hopfield &&
                               (th.patterns != sh.patterns || th.beta != sh.beta))) {
      fail_data("clone_memory: head " + std::to_string(h) + " differs (teacher " +
                kind_name(th.kind) + ", student " + kind_name(sh.kind) + ")");
    }
    if (tc.n_classes != sc.n_classes) {
      fail_data("clone_memory: class counts differ");
    }
    for (const std::string& name : teacher.head_param_names(static_cast<int>(h))) {
      student.param(name) = teacher.param(name);
    }
  }
  student.param("importance") = teacher.param("importance");
}

nn::Network select_head(const nn::Network& net, int head) {
  nn::NetworkCfg cfg = net.cfg();
  cfg.heads = {net.cfg().heads[static_cast<size_t>(head)]};
  cfg.ensemble = false;
  nn::Network selected(cfg);
  for (const std::string& name : selected.param_names()) {
    if (name.rfind("head0.", 0) == 0) {
      std::string src = "head" + std::to_string(head) + name.substr(5);
      selected.param(name) = net.param(src);
    } else {
      selected.param(name) = net.param(name);
    }
  }
  return selected;
}

nn::Network auto_search_select(const nn::Network& net) {
  if (!net.cfg().ensemble) fail_data("auto_search_select: network has no head ensemble");
  std::vector<double> q = net.head_importance();
  int best = 0;
  for (size_t h = 1; h < q.size(); ++h) {
    if (q[h] > q[static_cast<size_t>(best)]) best = static_cast<int>(h);
  }
  return select_head(net, best);
}

nn::Network finetune_final_stage(const nn::Network& teacher, nn::Network& student,
                                 const TrainData& data, const DistillConfig& cfg,
                                 TrainReport* report) {
  validate_distill_config(cfg);
  if (data.train.empty() || data.val.empty()) fail_data("finetune: empty split");
  if (cfg.enable_memory) clone_memory(teacher, student);

  std::vector<Tensor<Real>> teacher_logits;
  if (cfg.enable_logits && cfg.finetune_epochs > 0) {
    teacher_logits = precompute_logits(teacher, data.train, cfg.batch_size);
  }

  Adam adam({cfg.lr});
  Rng shuffle_rng(cfg.seed, 200);
  const int n_train = static_cast<int>(data.train.size());
  const std::vector<std::string> all_names(student.param_names().begin(),
                                           student.param_names().end());
  std::vector<Tensor<Real>> grad_store;

  for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
    std::vector<int> order = shuffled_order(n_train, shuffle_rng);
    auto batches = data::make_batches(n_train, cfg.batch_size, &order);
    double loss_sum = 0;
    for (const auto& idx : batches) {
      Tensor<Real> x = data::gather_batch(data.train, idx);
      std::vector<int> labels = data::gather_labels(data.train, idx);
      Tape<Real> tape;
      nn::Network::Bound bound = student.forward(tape, x, 0, true, /*trainable=*/true);
      Val<Real> loss;
      if (cfg.enable_logits) {
        loss = logits_loss_ld(tape, bound.output, gather_rows(teacher_logits, idx), labels,
                              cfg.lambda, cfg.tau, cfg.gamma);
      } else {
        loss = tape.soft_cross_entropy(bound.output,
                                       one_hot<Real>(labels, student.cfg().n_classes));
      }
      loss_sum += scalar_loss(tape, loss) * static_cast<double>(idx.size());
      tape.backward(loss);
      adam.step(collect_grads(student, tape, bound.params, all_names, grad_store));
    }
    if (report) {
      EpochStats stats;
      stats.train_loss = loss_sum / n_train;
      record_val(student, data, cfg.batch_size, stats);
      report->epochs.push_back(std::move(stats));
    }
  }

  nn::Network selected = auto_search_select(student);
  if (report) {
    metrics::ConfusionMatrix cm = evaluate(selected, data.val, cfg.batch_size);
    report->final_val_accuracy = metrics::accuracy(cm);
    report->final_val_f1 = metrics::f1_macro(cm);
    report->ensemble_val_accuracy =
        metrics::accuracy(evaluate(student, data.val, cfg.batch_size));
    for (size_t h = 0; h < student.cfg().heads.size(); ++h) {
      nn::Network solo = select_head(student, static_cast<int>(h));
      report->per_head_val_accuracy.push_back(
          metrics::accuracy(evaluate(solo, data.val, cfg.batch_size)));
    }
  }
  return selected;
}

}  // namespace smld::distill
