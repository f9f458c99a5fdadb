#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "smld/core/tensor.hpp"

namespace smld::data {

// One labeled window: values [C,L].
struct SensorWindow {
  Tensor<float> values;
  int label = 0;
  int subject = 0;
};

// Continuous per-subject recording with per-sample labels: values [C,N].
struct LabeledStream {
  int subject = 0;
  std::vector<double> t;
  Tensor<float> values;
  std::vector<int> labels;

  int channels() const { return values.ndim() == 2 ? values.dim(0) : 0; }
  int samples() const { return values.ndim() == 2 ? values.dim(1) : 0; }
};

struct DatasetMeta {
  int channels = 0;
  int window_len = 0;
  int n_classes = 0;
};

// Sliding windows starting at 0, H, 2H, ...; count = floor((N-L)/H)+1.
// Window label is the majority label; ties go to the label whose first
// occurrence inside the window is earliest. A stream shorter than L yields
// an empty result.
std::vector<SensorWindow> window_signal(const LabeledStream& stream, int win_len, int hop);

// Disjoint subject partition; ceil(val_fraction * subjects) validation
// subjects, at least 1 on each side. Deterministic under seed.
std::pair<std::vector<SensorWindow>, std::vector<SensorWindow>> split_by_subject(
    const std::vector<SensorWindow>& windows, double val_fraction, uint64_t seed);

// Batch assembly: stacks windows[idx] into [B,C,L] plus labels.
Tensor<float> gather_batch(const std::vector<SensorWindow>& windows, const std::vector<int>& idx);
std::vector<int> gather_labels(const std::vector<SensorWindow>& windows,
                               const std::vector<int>& idx);

// Index batches for one epoch, optionally shuffled with the caller's rng.
std::vector<std::vector<int>> make_batches(int count, int batch_size,
                                           const std::vector<int>* order = nullptr);

int max_label(const std::vector<LabeledStream>& streams);

}  // namespace smld::data
