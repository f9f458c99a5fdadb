#pragma once

#include <cmath>
#include <vector>

#include "smld/core/tape.hpp"
#include "smld/core/tensor.hpp"

namespace smld::distill {

// ---- plain-tensor helpers (teacher-side, no gradients) ----

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  if (logits.ndim() != 2) fail_data("softmax_rows: expected [B,C]");
  const int b = logits.dim(0), c = logits.dim(1);
  Tensor<T> out({b, c});
  for (int i = 0; i < b; ++i) {
    double mx = static_cast<double>(logits.at(i, 0));
    for (int j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(logits.at(i, j)));
    double denom = 0;
    for (int j = 0; j < c; ++j) denom += std::exp(static_cast<double>(logits.at(i, j)) - mx);
    for (int j = 0; j < c; ++j)
      out.at(i, j) = static_cast<T>(std::exp(static_cast<double>(logits.at(i, j)) - mx) / denom);
  }
  return out;
}

template <typename T>
Tensor<T> scale_tensor(const Tensor<T>& t, double c) {
  Tensor<T> out = t;
  for (auto& x : out.v) x = static_cast<T>(static_cast<double>(x) * c);
  return out;
}

template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, int n_classes) {
  Tensor<T> out({static_cast<int>(labels.size()), n_classes});
  for (size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= n_classes) fail_data("one_hot: label " + std::to_string(y) + " out of range");
    out.at(static_cast<int>(i), y) = T(1);
  }
  return out;
}

template <typename T>
int row_argmax(const Tensor<T>& t, int row) {
  int best = 0;
  for (int j = 1; j < t.dim(1); ++j)
    if (t.at(row, j) > t.at(row, best)) best = j;
  return best;
}

// Conditional soft target Q. Per row: take the teacher's probabilities
// P = softmax(teacher_logits); when the teacher's argmax misses the true
// class, overwrite the true-class entry with the raw hardness factor gamma;
// re-normalize the mixture through an outer softmax either way.
template <typename T>
Tensor<T> conditional_target(const Tensor<T>& teacher_logits, const std::vector<int>& labels,
                             double gamma) {
  if (teacher_logits.ndim() != 2) fail_data("conditional_target: expected [B,C]");
  const int b = teacher_logits.dim(0), c = teacher_logits.dim(1);
  if (static_cast<int>(labels.size()) != b) fail_data("conditional_target: label count mismatch");
  Tensor<T> probs = softmax_rows(teacher_logits);
  Tensor<T> mixed({b, c});
  for (int i = 0; i < b; ++i) {
    int pred = row_argmax(teacher_logits, i);
    for (int j = 0; j < c; ++j) mixed.at(i, j) = probs.at(i, j);
    if (pred != labels[static_cast<size_t>(i)]) {
      mixed.at(i, labels[static_cast<size_t>(i)]) = static_cast<T>(gamma);
    }
  }
  return softmax_rows(mixed);
}

// ---- graph losses (student-side, differentiable) ----

// Time-plus-frequency feature matching between identically shaped stage
// features [B,C,L] (a [C,L] pair is treated as batch of one):
//   (1/(C*L)) * ||rfft(T) - rfft(S)||_F + (1/(C*L)) * ||T - S||_F
// per sample, averaged over the batch. rfft runs along the time axis and is
// applied to the difference, which is the same transform by linearity.
template <typename T>
Val<T> stage_loss(Tape<T>& tape, Val<T> student_feat, Val<T> teacher_feat) {
  const Tensor<T>& s = tape.value(student_feat);
  const Tensor<T>& t = tape.value(teacher_feat);
  if (!s.same_shape(t)) {
    fail_data("stage_loss: student " + s.shape_str() + " vs teacher " + t.shape_str());
  }
  Val<T> sv = student_feat, tv = teacher_feat;
  if (s.ndim() == 2) {
    std::vector<int> shp = {1, s.dim(0), s.dim(1)};
    sv = tape.reshape(sv, shp);
    tv = tape.reshape(tv, shp);
  } else if (s.ndim() != 3) {
    fail_data("stage_loss: expected [B,C,L] or [C,L] features");
  }
  const Tensor<T>& sr = tape.value(sv);
  const double inv_cl = 1.0 / (static_cast<double>(sr.dim(1)) * sr.dim(2));
  Val<T> diff = tape.sub(tv, sv);
  Val<T> tendency = tape.frobenius_norm_per_sample(diff);
  Val<T> periodic = tape.frobenius_norm_per_sample(tape.rfft(diff));
  Val<T> per_sample = tape.add(tape.scale(periodic, inv_cl), tape.scale(tendency, inv_cl));
  return tape.mean(per_sample);
}

// Vanilla soft-target distillation:
//   CE(student, hard) + lambda * CE(student/tau, softmax(teacher/tau))
template <typename T>
Val<T> hinton_loss(Tape<T>& tape, Val<T> student_logits, const Tensor<T>& teacher_logits,
                   const std::vector<int>& labels, double lambda, double tau) {
  const Tensor<T>& s = tape.value(student_logits);
  if (!s.same_shape(teacher_logits)) fail_data("hinton_loss: logits shape mismatch");
  if (tau <= 0) fail_data("hinton_loss: tau must be positive");
  Val<T> hard = tape.soft_cross_entropy(student_logits, one_hot<T>(labels, s.dim(1)));
  if (lambda == 0) return hard;
  Tensor<T> soft_target = softmax_rows(scale_tensor(teacher_logits, 1.0 / tau));
  Val<T> soft =
      tape.soft_cross_entropy(tape.scale(student_logits, 1.0 / tau), std::move(soft_target));
  return tape.add(hard, tape.scale(soft, lambda));
}

// Conditional logits-distillation loss:
//   -sum_i Y_i log P(S)_i - lambda * sum_i Q(T/tau)_i log P(S/tau)_i
// batch-averaged; the hard branch is untempered.
template <typename T>
Val<T> logits_loss_ld(Tape<T>& tape, Val<T> student_logits, const Tensor<T>& teacher_logits,
                      const std::vector<int>& labels, double lambda, double tau, double gamma) {
  const Tensor<T>& s = tape.value(student_logits);
  if (!s.same_shape(teacher_logits)) fail_data("logits_loss_ld: logits shape mismatch");
  if (tau <= 0) fail_data("logits_loss_ld: tau must be positive");
  Val<T> hard = tape.soft_cross_entropy(student_logits, one_hot<T>(labels, s.dim(1)));
  if (lambda == 0) return hard;
  Tensor<T> q = conditional_target(scale_tensor(teacher_logits, 1.0 / tau), labels, gamma);
  Val<T> soft = tape.soft_cross_entropy(tape.scale(student_logits, 1.0 / tau), std::move(q));
  return tape.add(hard, tape.scale(soft, lambda));
}

}  // namespace smld::distill
