#pragma once

#include <cstdint>
#include <vector>

#include "smld/data/dataset.hpp"

namespace smld::data {

// Deterministic sinusoid-plus-trend generator used for desk-scale runs.
// Per subject the stream concatenates one segment per class; within a class-k
// segment, channel c carries
//   amplitude * sin(2*pi*f_k*t + phase(subject, c)) + trend_slope*t + N(0, sigma^2)
// with t continuous across the whole subject stream.
struct SynthSpec {
  int classes = 6;
  int subjects = 5;
  int channels = 3;
  double sample_rate_hz = 50.0;
  double window_seconds = 5.0;
  int windows_per_class_per_subject = 24;
  std::vector<double> class_freqs_hz;  // empty selects 2,4,6,... Hz
  double noise_sigma = 0.3;
  double trend_slope = 0.01;
  double amplitude = 1.0;
  int hop = 0;  // samples; 0 selects window/2
  uint64_t seed = 0;

  int window_len() const;
  int hop_len() const;
};

struct SynthResult {
  std::vector<LabeledStream> streams;  // concatenated segments, for CSV emission
  // The generated dataset proper: windows cut inside each class segment, so
  // every window carries a single class. Exactly windows_per_class_per_subject
  // windows per (subject, class).
  std::vector<SensorWindow> windows;
  std::vector<double> class_freqs_hz;
  DatasetMeta meta;  // window_len/hop filled from the spec
  int hop = 0;
};

void validate_synth_spec(const SynthSpec& spec);
SynthResult synth_generate(const SynthSpec& spec);

}  // namespace smld::data
