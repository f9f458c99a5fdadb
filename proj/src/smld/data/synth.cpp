#include "smld/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "smld/core/error.hpp"
#include "smld/core/rng.hpp"

namespace smld::data {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

int SynthSpec::window_len() const {
  return static_cast<int>(std::lround(window_seconds * sample_rate_hz));
}

int SynthSpec::hop_len() const { return hop > 0 ? hop : std::max(1, window_len() / 2); }

void validate_synth_spec(const SynthSpec& spec) {
  if (spec.classes < 1) fail_config("synth: classes must be >= 1");
  if (spec.subjects < 1) fail_config("synth: subjects must be >= 1");
  if (spec.channels < 1) fail_config("synth: channels must be >= 1");
  if (spec.sample_rate_hz <= 0) fail_config("synth: sample_rate_hz must be positive");
  if (spec.window_len() < 1) fail_config("synth: window is shorter than one sample");
  if (spec.windows_per_class_per_subject < 1) {
    fail_config("synth: windows_per_class_per_subject must be >= 1");
  }
  if (spec.noise_sigma < 0) fail_config("synth: noise_sigma must be >= 0");
  if (!spec.class_freqs_hz.empty()) {
    if (static_cast<int>(spec.class_freqs_hz.size()) != spec.classes) {
      fail_config("synth: class_freqs_hz must list one frequency per class");
    }
    std::set<double> uniq(spec.class_freqs_hz.begin(), spec.class_freqs_hz.end());
    if (static_cast<int>(uniq.size()) != spec.classes) {
      fail_config("synth: class frequencies must be pairwise distinct");
    }
  }
}

SynthResult synth_generate(const SynthSpec& spec) {
  validate_synth_spec(spec);
  SynthResult result;
  result.class_freqs_hz = spec.class_freqs_hz;
  if (result.class_freqs_hz.empty()) {
    for (int k = 0; k < spec.classes; ++k) {
      result.class_freqs_hz.push_back(2.0 * (k + 1));
    }
  }

  const int win = spec.window_len();
  const int hop = spec.hop_len();
  const int seg_len = win + (spec.windows_per_class_per_subject - 1) * hop;
  const int total = seg_len * spec.classes;
  const double dt = 1.0 / spec.sample_rate_hz;

  for (int s = 0; s < spec.subjects; ++s) {
    Rng rng(spec.seed, 1000 + static_cast<uint64_t>(s));
    LabeledStream stream;
    stream.subject = s;
    stream.values = Tensor<float>({spec.channels, total});
    stream.t.resize(static_cast<size_t>(total));
    stream.labels.resize(static_cast<size_t>(total));
    int pos = 0;
    for (int k = 0; k < spec.classes; ++k) {
      const double freq = result.class_freqs_hz[static_cast<size_t>(k)];
      for (int i = 0; i < seg_len; ++i, ++pos) {
        const double t = pos * dt;
        stream.t[static_cast<size_t>(pos)] = t;
        stream.labels[static_cast<size_t>(pos)] = k;
        for (int c = 0; c < spec.channels; ++c) {
          const double phase =
              kTwoPi * s / spec.subjects + 0.25 * 3.14159265358979323846 * c;
          double v = spec.amplitude * std::sin(kTwoPi * freq * t + phase) +
                     spec.trend_slope * t;
          if (spec.noise_sigma > 0) v += rng.normal(0.0, spec.noise_sigma);
          stream.values.at(c, pos) = static_cast<float>(v);
        }
      }
    }
    // cut the per-class windows before the stream moves
    for (int k = 0; k < spec.classes; ++k) {
      const int seg_start = k * seg_len;
      for (int wi = 0; wi < spec.windows_per_class_per_subject; ++wi) {
        const int start = seg_start + wi * hop;
        SensorWindow w;
        w.subject = s;
        w.label = k;
        w.values = Tensor<float>({spec.channels, win});
        for (int c = 0; c < spec.channels; ++c) {
          const float* src = &stream.values.at(c, start);
          std::copy(src, src + win, &w.values.at(c, 0));
        }
        result.windows.push_back(std::move(w));
      }
    }
    result.streams.push_back(std::move(stream));
  }

  result.meta.channels = spec.channels;
  result.meta.window_len = win;
  result.meta.n_classes = spec.classes;
  result.hop = hop;
  return result;
}

}  // namespace smld::data
