#pragma once

#include <vector>

#include "smld/data/dataset.hpp"

namespace smld::data {

enum class ScalerKind { None, MinMax, Robust };

struct RobustChannel {
  double q1 = 0, q3 = 0, iqr = 0;
  double lower = 0, upper = 0;
  bool degenerate = false;  // IQR == 0 under the zero-fallback policy
};

struct MinMaxChannel {
  double min = 0, max = 0;
};

struct ScalerParams {
  ScalerKind kind = ScalerKind::Robust;
  bool minmax_centered = false;
  std::vector<RobustChannel> robust;
  std::vector<MinMaxChannel> minmax;

  int channels() const {
    return kind == ScalerKind::Robust ? static_cast<int>(robust.size())
                                      : static_cast<int>(minmax.size());
  }
};

// Quantile by linear interpolation on the sorted sample (position (n-1)*q).
double quantile_sorted(const std::vector<double>& sorted, double q);

// Fit on the training split only; statistics are per channel over every
// sample value. Robust channels with IQR == 0 are an error unless
// robust_fallback_zero is set, in which case the channel scales to zeros.
ScalerParams fit_scaler(const std::vector<SensorWindow>& train, ScalerKind kind,
                        bool robust_fallback_zero = false, bool minmax_centered = false);

// Robust: clip(x, lower, upper) / (4*IQR).
// MinMax: clip(x, min, max) / (max - min); the centered variant subtracts
// min from the clipped value first.
void apply_scaler(Tensor<float>& window_values, const ScalerParams& params);
void apply_scaler(std::vector<SensorWindow>& windows, const ScalerParams& params);

}  // namespace smld::data
