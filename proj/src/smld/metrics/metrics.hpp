#pragma once

#include <cstdint>
#include <vector>

#include "smld/nn/model.hpp"

namespace smld::metrics {

// Integer counts, rows = ground truth, cols = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int n_classes);

  void add(int truth, int predicted, int64_t count = 1);

  int n_classes() const { return n_; }
  int64_t at(int truth, int predicted) const;
  int64_t total() const;
  int64_t trace() const;

  // row totals (truth counts) / column totals (prediction counts)
  int64_t row_total(int truth) const;
  int64_t col_total(int predicted) const;

 private:
  int n_;
  std::vector<int64_t> counts_;
};

struct ClassScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R).
// A zero denominator anywhere contributes 0.
std::vector<ClassScore> per_class_scores(const ConfusionMatrix& cm);

// Unweighted mean of per-class F1.
double f1_macro(const ConfusionMatrix& cm);

// trace/total; empty matrix is an error.
double accuracy(const ConfusionMatrix& cm);

// Multiply-accumulate count for one input window. Convolutions count
// Lout*Cout*K*Cin, dense layers I*O, Hopfield heads m*D + m*D + D*classes.
// Activations, softmax and the ensemble combination are excluded.
int64_t macs_estimate(const nn::NetworkCfg& cfg);
int64_t head_macs(const nn::NetworkCfg& cfg, int head);

}  // namespace smld::metrics
