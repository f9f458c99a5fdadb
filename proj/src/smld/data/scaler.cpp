#include "smld/data/scaler.hpp"

#include <algorithm>
#include <cmath>

#include "smld/core/error.hpp"

namespace smld::data {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail_data("quantile: empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

ScalerParams fit_scaler(const std::vector<SensorWindow>& train, ScalerKind kind,
                        bool robust_fallback_zero, bool minmax_centered) {
  ScalerParams params;
  params.kind = kind;
  params.minmax_centered = minmax_centered;
  if (kind == ScalerKind::None) return params;
  if (train.empty()) fail_data("fit_scaler: no training windows");
  const int channels = train.front().values.dim(0);

  for (int ch = 0; ch < channels; ++ch) {
    std::vector<double> sample;
    for (const SensorWindow& w : train) {
      const int l = w.values.dim(1);
      const float* src = &w.values.at(ch, 0);
      for (int i = 0; i < l; ++i) sample.push_back(static_cast<double>(src[i]));
    }
    if (kind == ScalerKind::Robust) {
      if (sample.size() < 4) fail_data("robust scaler: need at least 4 samples per channel");
      std::sort(sample.begin(), sample.end());
      RobustChannel rc;
      rc.q1 = quantile_sorted(sample, 0.25);
      rc.q3 = quantile_sorted(sample, 0.75);
      rc.iqr = rc.q3 - rc.q1;
      rc.lower = rc.q1 - 1.5 * rc.iqr;
      rc.upper = rc.q3 + 1.5 * rc.iqr;
      if (rc.iqr <= 0) {
        if (!robust_fallback_zero) {
          fail_data("robust scaler: channel " + std::to_string(ch) +
                    " is degenerate (IQR == 0)");
        }
        rc.degenerate = true;
      }
      params.robust.push_back(rc);
    } else {
      MinMaxChannel mc;
      mc.min = *std::min_element(sample.begin(), sample.end());
      mc.max = *std::max_element(sample.begin(), sample.end());
      if (!(mc.max > mc.min)) {
        fail_data("minmax scaler: channel " + std::to_string(ch) + " is constant");
      }
      params.minmax.push_back(mc);
    }
  }
  return params;
}

void apply_scaler(Tensor<float>& window_values, const ScalerParams& params) {
  if (params.kind == ScalerKind::None) return;
  const int channels = window_values.dim(0);
  const int len = window_values.dim(1);
  if (channels != params.channels()) {
    fail_data("apply_scaler: window has " + std::to_string(channels) +
              " channels, scaler was fitted on " + std::to_string(params.channels()));
  }
  for (int ch = 0; ch < channels; ++ch) {
    float* x = &window_values.at(ch, 0);
    if (params.kind == ScalerKind::Robust) {
      const RobustChannel& rc = params.robust[static_cast<size_t>(ch)];
      if (rc.degenerate) {
        for (int i = 0; i < len; ++i) x[i] = 0.0f;
        continue;
      }
      const double inv = 1.0 / (4.0 * rc.iqr);
      for (int i = 0; i < len; ++i) {
        double v = std::clamp(static_cast<double>(x[i]), rc.lower, rc.upper);
        x[i] = static_cast<float>(v * inv);
      }
    } else {
      const MinMaxChannel& mc = params.minmax[static_cast<size_t>(ch)];
      const double inv = 1.0 / (mc.max - mc.min);
      for (int i = 0; i < len; ++i) {
        double v = std::clamp(static_cast<double>(x[i]), mc.min, mc.max);
        if (params.minmax_centered) v -= mc.min;
        x[i] = static_cast<float>(v * inv);
      }
    }
  }
}

void apply_scaler(std::vector<SensorWindow>& windows, const ScalerParams& params) {
  for (SensorWindow& w : windows) apply_scaler(w.values, params);
}

}  // namespace smld::data
