#include "smld/metrics/metrics.hpp"

#include "smld/core/error.hpp"

namespace smld::metrics {

ConfusionMatrix::ConfusionMatrix(int n_classes) : n_(n_classes) {
  if (n_classes < 1) fail_data("confusion matrix: need at least one class");
  counts_.assign(static_cast<size_t>(n_) * n_, 0);
}

void ConfusionMatrix::add(int truth, int predicted, int64_t count) {
  if (truth < 0 || truth >= n_ || predicted < 0 || predicted >= n_) {
    fail_data("confusion matrix: class index out of range");
  }
  counts_[static_cast<size_t>(truth) * n_ + predicted] += count;
}

int64_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_[static_cast<size_t>(truth) * n_ + predicted];
}

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t c : counts_) t += c;
  return t;
}

int64_t ConfusionMatrix::trace() const {
  int64_t t = 0;
  for (int i = 0; i < n_; ++i) t += at(i, i);
  return t;
}

int64_t ConfusionMatrix::row_total(int truth) const {
  int64_t t = 0;
  for (int j = 0; j < n_; ++j) t += at(truth, j);
  return t;
}

int64_t ConfusionMatrix::col_total(int predicted) const {
  int64_t t = 0;
  for (int i = 0; i < n_; ++i) t += at(i, predicted);
  return t;
}

std::vector<ClassScore> per_class_scores(const ConfusionMatrix& cm) {
  std::vector<ClassScore> scores(static_cast<size_t>(cm.n_classes()));
  for (int c = 0; c < cm.n_classes(); ++c) {
    int64_t tp = cm.at(c, c);
    int64_t tp_fp = cm.col_total(c);
    int64_t tp_fn = cm.row_total(c);
    ClassScore& s = scores[static_cast<size_t>(c)];
    s.precision = tp_fp > 0 ? static_cast<double>(tp) / tp_fp : 0.0;
    s.recall = tp_fn > 0 ? static_cast<double>(tp) / tp_fn : 0.0;
    s.f1 = (s.precision + s.recall) > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
  }
  return scores;
}

double f1_macro(const ConfusionMatrix& cm) {
  std::vector<ClassScore> scores = per_class_scores(cm);
  double sum = 0;
  for (const ClassScore& s : scores) sum += s.f1;
  return sum / static_cast<double>(cm.n_classes());
}

double accuracy(const ConfusionMatrix& cm) {
  int64_t total = cm.total();
  if (total == 0) fail_data("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

int64_t head_macs(const nn::NetworkCfg& cfg, int head) {
  const int d = cfg.stages.back().out_channels();
  const nn::HeadCfg& h = cfg.heads[static_cast<size_t>(head)];
  if (h.kind == nn::HeadKind::Linear) {
    return static_cast<int64_t>(d) * cfg.n_classes;
  }
  int64_t md = static_cast<int64_t>(h.patterns) * d;
  return md + md + static_cast<int64_t>(d) * cfg.n_classes;
}

int64_t macs_estimate(const nn::NetworkCfg& cfg) {
  int64_t total = 0;
  int cin = cfg.in_channels;
  int len = cfg.in_len;
  for (const nn::StageCfg& st : cfg.stages) {
    for (const nn::ConvBlockCfg& blk : st.blocks) {
      int lout = nn::conv_out_len(len, blk.kernel, blk.stride, nn::pad_for(blk.kernel));
      total += static_cast<int64_t>(lout) * blk.out_channels * blk.kernel * cin;
      cin = blk.out_channels;
      len = lout;
    }
  }
  for (size_t h = 0; h < cfg.heads.size(); ++h) total += head_macs(cfg, static_cast<int>(h));
  return total;
}

}  // namespace smld::metrics
