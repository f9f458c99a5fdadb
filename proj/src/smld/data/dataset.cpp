#include "smld/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "smld/core/error.hpp"
#include "smld/core/rng.hpp"

namespace smld::data {

std::vector<SensorWindow> window_signal(const LabeledStream& stream, int win_len, int hop) {
  if (win_len < 1) fail_data("window_signal: window length must be >= 1");
  if (hop < 1) fail_data("window_signal: hop must be >= 1");
  const int n = stream.samples();
  const int c = stream.channels();
  std::vector<SensorWindow> out;
  if (win_len > n) return out;
  const int count = (n - win_len) / hop + 1;
  out.reserve(static_cast<size_t>(count));
  for (int wi = 0; wi < count; ++wi) {
    const int start = wi * hop;
    SensorWindow w;
    w.subject = stream.subject;
    w.values = Tensor<float>({c, win_len});
    for (int ch = 0; ch < c; ++ch) {
      const float* src = &stream.values.at(ch, start);
      float* dst = &w.values.at(ch, 0);
      std::copy(src, src + win_len, dst);
    }
    // majority label; ties resolved by earliest first occurrence
    std::map<int, int> counts;
    std::map<int, int> first_seen;
    for (int i = 0; i < win_len; ++i) {
      int lab = stream.labels[static_cast<size_t>(start + i)];
      ++counts[lab];
      first_seen.try_emplace(lab, i);
    }
    int best_label = -1, best_count = -1, best_first = win_len;
    for (const auto& [lab, cnt] : counts) {
      int first = first_seen[lab];
      if (cnt > best_count || (cnt == best_count && first < best_first)) {
        best_label = lab;
        best_count = cnt;
        best_first = first;
      }
    }
    w.label = best_label;
    out.push_back(std::move(w));
  }
  return out;
}

std::pair<std::vector<SensorWindow>, std::vector<SensorWindow>> split_by_subject(
    const std::vector<SensorWindow>& windows, double val_fraction, uint64_t seed) {
  std::set<int> subject_set;
  for (const SensorWindow& w : windows) subject_set.insert(w.subject);
  if (subject_set.size() < 2) {
    fail_data("split_by_subject: need at least 2 subjects, got " +
              std::to_string(subject_set.size()));
  }
  std::vector<int> subjects(subject_set.begin(), subject_set.end());
  Rng rng(seed, 11);
  rng.shuffle(subjects);
  const int n = static_cast<int>(subjects.size());
  int n_val = static_cast<int>(std::ceil(val_fraction * n));
  n_val = std::clamp(n_val, 1, n - 1);
  std::set<int> val_subjects(subjects.begin(), subjects.begin() + n_val);
  std::pair<std::vector<SensorWindow>, std::vector<SensorWindow>> out;
  for (const SensorWindow& w : windows) {
    (val_subjects.count(w.subject) ? out.second : out.first).push_back(w);
  }
  return out;
}

Tensor<float> gather_batch(const std::vector<SensorWindow>& windows, const std::vector<int>& idx) {
  if (idx.empty()) fail_data("gather_batch: empty index list");
  const Tensor<float>& first = windows[static_cast<size_t>(idx[0])].values;
  const int c = first.dim(0), l = first.dim(1);
  Tensor<float> batch({static_cast<int>(idx.size()), c, l});
  for (size_t b = 0; b < idx.size(); ++b) {
    const Tensor<float>& src = windows[static_cast<size_t>(idx[b])].values;
    std::copy(src.v.begin(), src.v.end(),
              batch.v.begin() + static_cast<int64_t>(b) * c * l);
  }
  return batch;
}

std::vector<int> gather_labels(const std::vector<SensorWindow>& windows,
                               const std::vector<int>& idx) {
  std::vector<int> labels(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) labels[i] = windows[static_cast<size_t>(idx[i])].label;
  return labels;
}

std::vector<std::vector<int>> make_batches(int count, int batch_size,
                                           const std::vector<int>* order) {
  if (batch_size < 1) fail_data("make_batches: batch size must be >= 1");
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < count; start += batch_size) {
    int end = std::min(count, start + batch_size);
    std::vector<int> b;
    b.reserve(static_cast<size_t>(end - start));
    for (int i = start; i < end; ++i) b.push_back(order ? (*order)[static_cast<size_t>(i)] : i);
    batches.push_back(std::move(b));
  }
  return batches;
}

int max_label(const std::vector<LabeledStream>& streams) {
  int mx = -1;
  for (const LabeledStream& s : streams)
    for (int lab : s.labels) mx = std::max(mx, lab);
  return mx;
}

}  // namespace smld::data
