#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "smld/core/fft.hpp"
#include "smld/core/rng.hpp"
#include "smld/data/csv.hpp"
#include "smld/data/scaler.hpp"
#include "smld/data/synth.hpp"

using smld::Error;
using smld::Rng;
using smld::Tensor;
namespace data = smld::data;
namespace fs = std::filesystem;

namespace {

data::LabeledStream make_stream(int subject, int channels, const std::vector<int>& labels) {
  data::LabeledStream s;
  s.subject = subject;
  const int n = static_cast<int>(labels.size());
  s.labels = labels;
  s.values = Tensor<float>({channels, n});
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < n; ++i) s.values.at(c, i) = static_cast<float>(c * 100 + i);
  s.t.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) s.t[static_cast<size_t>(i)] = 0.1 * i;
  return s;
}

std::string temp_path(const char* name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("window counts follow floor((N-L)/H)+1") {
  data::LabeledStream s = make_stream(0, 1, std::vector<int>(10, 0));
  CHECK(data::window_signal(s, 4, 2).size() == 4);
  CHECK(data::window_signal(s, 10, 3).size() == 1);  // N == L
  data::LabeledStream s3 = make_stream(0, 1, std::vector<int>(3, 0));
  CHECK(data::window_signal(s3, 4, 1).empty());
}

TEST_CASE("window values and starts") {
  data::LabeledStream s = make_stream(2, 2, std::vector<int>(10, 1));
  auto windows = data::window_signal(s, 4, 2);
  REQUIRE(windows.size() == 4);
  for (size_t w = 0; w < windows.size(); ++w) {
    CHECK(windows[w].subject == 2);
    CHECK(windows[w].label == 1);
    for (int i = 0; i < 4; ++i) {
      CHECK(windows[w].values.at(0, i) == doctest::Approx(2.0 * w + i));
      CHECK(windows[w].values.at(1, i) == doctest::Approx(100.0 + 2.0 * w + i));
    }
  }
}

TEST_CASE("majority window label with earliest-occurrence tie break") {
  // labels: 0 0 1 1 -> tie between 0 and 1, 0 appears first
  data::LabeledStream s = make_stream(0, 1, {0, 0, 1, 1});
  auto w = data::window_signal(s, 4, 1);
  REQUIRE(w.size() == 1);
  CHECK(w[0].label == 0);

  // 1 1 1 0 -> clear majority
  data::LabeledStream s2 = make_stream(0, 1, {1, 1, 1, 0});
  CHECK(data::window_signal(s2, 4, 1)[0].label == 1);

  // 2 0 0 2 -> tie, 2 first
  data::LabeledStream s3 = make_stream(0, 1, {2, 0, 0, 2});
  CHECK(data::window_signal(s3, 4, 1)[0].label == 2);
}

TEST_CASE("subject split is a disjoint deterministic partition") {
  std::vector<data::SensorWindow> windows;
  for (int subj = 0; subj < 10; ++subj) {
    for (int k = 0; k < 5; ++k) {
      data::SensorWindow w;
      w.values = Tensor<float>({1, 4});
      w.subject = subj;
      w.label = k % 3;
      windows.push_back(w);
    }
  }
  auto [train, val] = data::split_by_subject(windows, 0.3, 77);
  std::set<int> train_subj, val_subj;
  for (const auto& w : train) train_subj.insert(w.subject);
  for (const auto& w : val) val_subj.insert(w.subject);
  CHECK(train_subj.size() == 7);
  CHECK(val_subj.size() == 3);
  for (int s : val_subj) CHECK(train_subj.count(s) == 0);
  CHECK(train.size() + val.size() == windows.size());

  // determinism
  auto [train2, val2] = data::split_by_subject(windows, 0.3, 77);
  CHECK(train2.size() == train.size());
  for (size_t i = 0; i < train.size(); ++i) CHECK(train2[i].subject == train[i].subject);

  // ceil rule: 3 subjects at 0.3 still yields a validation subject
  std::vector<data::SensorWindow> three(windows.begin(), windows.begin() + 15);
  auto [t3, v3] = data::split_by_subject(three, 0.3, 1);
  std::set<int> v3s;
  for (const auto& w : v3) v3s.insert(w.subject);
  CHECK(v3s.size() == 1);

  // single subject is an error
  std::vector<data::SensorWindow> one(windows.begin(), windows.begin() + 5);
  CHECK_THROWS_AS((void)data::split_by_subject(one, 0.3, 1), Error);
}

TEST_CASE("robust scaler fixture: channel 0..8") {
  std::vector<data::SensorWindow> train(1);
  train[0].values = Tensor<float>::from({1, 9}, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  data::ScalerParams params = data::fit_scaler(train, data::ScalerKind::Robust);
  REQUIRE(params.robust.size() == 1);
  CHECK(params.robust[0].q1 == doctest::Approx(2.0));
  CHECK(params.robust[0].q3 == doctest::Approx(6.0));
  CHECK(params.robust[0].iqr == doctest::Approx(4.0));
  CHECK(params.robust[0].lower == doctest::Approx(-4.0));
  CHECK(params.robust[0].upper == doctest::Approx(12.0));

  // x' = x/16 on the fit data
  Tensor<float> w = train[0].values;
  data::apply_scaler(w, params);
  for (int i = 0; i < 9; ++i) CHECK(w.at(0, i) == doctest::Approx(i / 16.0).epsilon(1e-7));

  // outlier 100 clips to 12 then scales to 0.75
  Tensor<float> outlier = Tensor<float>::from({1, 1}, {100});
  data::apply_scaler(outlier, params);
  CHECK(outlier.at(0, 0) == doctest::Approx(0.75));
}

TEST_CASE("robust scaler output is bounded for arbitrary inputs") {
  Rng rng(3);
  std::vector<data::SensorWindow> train(1);
  train[0].values = Tensor<float>({2, 64});
  for (auto& v : train[0].values.v) v = static_cast<float>(rng.normal(0, 2));
  data::ScalerParams params = data::fit_scaler(train, data::ScalerKind::Robust);
  for (int rep = 0; rep < 200; ++rep) {
    Tensor<float> probe({2, 8});
    for (auto& v : probe.v) v = static_cast<float>(rng.uniform(-1e6, 1e6));
    data::apply_scaler(probe, params);
    for (int ch = 0; ch < 2; ++ch) {
      const data::RobustChannel& rc = params.robust[static_cast<size_t>(ch)];
      for (int i = 0; i < 8; ++i) {
        CHECK(probe.at(ch, i) >= rc.lower / (4 * rc.iqr) - 1e-6);
        CHECK(probe.at(ch, i) <= rc.upper / (4 * rc.iqr) + 1e-6);
      }
    }
  }
}

TEST_CASE("degenerate robust channel errors unless the fallback is set") {
  std::vector<data::SensorWindow> train(1);
  train[0].values = Tensor<float>({1, 16}, 3.5f);
  CHECK_THROWS_AS((void)data::fit_scaler(train, data::ScalerKind::Robust), Error);
  data::ScalerParams params = data::fit_scaler(train, data::ScalerKind::Robust, true);
  Tensor<float> w = train[0].values;
  data::apply_scaler(w, params);
  for (float x : w.v) CHECK(x == 0.0f);
}

TEST_CASE("minmax scaler follows the verbatim formula") {
  std::vector<data::SensorWindow> train(1);
  train[0].values = Tensor<float>::from({1, 5}, {0, 1, 2, 3, 4});
  data::ScalerParams params = data::fit_scaler(train, data::ScalerKind::MinMax);
  Tensor<float> w = train[0].values;
  data::apply_scaler(w, params);
  for (int i = 0; i < 5; ++i) CHECK(w.at(0, i) == doctest::Approx(i / 4.0));

  // values 2..6 scale to [0.5, 1.5]: the formula does not re-zero
  std::vector<data::SensorWindow> t2(1);
  t2[0].values = Tensor<float>::from({1, 5}, {2, 3, 4, 5, 6});
  data::ScalerParams p2 = data::fit_scaler(t2, data::ScalerKind::MinMax);
  Tensor<float> w2 = t2[0].values;
  data::apply_scaler(w2, p2);
  CHECK(w2.at(0, 0) == doctest::Approx(0.5));
  CHECK(w2.at(0, 4) == doctest::Approx(1.5));

  // centered variant re-zeroes
  data::ScalerParams p3 = data::fit_scaler(t2, data::ScalerKind::MinMax, false, true);
  Tensor<float> w3 = t2[0].values;
  data::apply_scaler(w3, p3);
  CHECK(w3.at(0, 0) == doctest::Approx(0.0));
  CHECK(w3.at(0, 4) == doctest::Approx(1.0));

  // constant channel is an error
  std::vector<data::SensorWindow> t4(1);
  t4[0].values = Tensor<float>({1, 8}, 2.0f);
  CHECK_THROWS_AS((void)data::fit_scaler(t4, data::ScalerKind::MinMax), Error);
}

TEST_CASE("quantile interpolation") {
  CHECK(data::quantile_sorted({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(data::quantile_sorted({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(data::quantile_sorted({5}, 0.75) == doctest::Approx(5.0));
}

TEST_CASE("synthetic generator determinism and spectral content") {
  data::SynthSpec spec;
  spec.classes = 3;
  spec.subjects = 2;
  spec.channels = 2;
  spec.windows_per_class_per_subject = 3;
  spec.noise_sigma = 0.0;
  spec.trend_slope = 0.0;
  spec.seed = 5;

  data::SynthResult a = data::synth_generate(spec);
  data::SynthResult b = data::synth_generate(spec);
  REQUIRE(a.streams.size() == 2);
  for (size_t i = 0; i < a.streams.size(); ++i) {
    CHECK(a.streams[i].values.v == b.streams[i].values.v);  // byte-identical
  }

  // sigma=0: dominant non-DC rfft bin of every generated window sits at
  // round(f_k*L/fs)
  const int win = spec.window_len();
  CHECK(a.windows.size() ==
        static_cast<size_t>(spec.classes * spec.subjects * spec.windows_per_class_per_subject));
  for (const data::SensorWindow& w : a.windows) {
    std::vector<double> x(static_cast<size_t>(win));
    for (int i = 0; i < win; ++i) x[static_cast<size_t>(i)] = w.values.at(0, i);
    smld::fft::Spectrum sp = smld::fft::rfft(x);
    int best = 1;
    for (int k = 2; k < sp.bins(); ++k) {
      double mag = sp.re[static_cast<size_t>(k)] * sp.re[static_cast<size_t>(k)] +
                   sp.im[static_cast<size_t>(k)] * sp.im[static_cast<size_t>(k)];
      double best_mag = sp.re[static_cast<size_t>(best)] * sp.re[static_cast<size_t>(best)] +
                        sp.im[static_cast<size_t>(best)] * sp.im[static_cast<size_t>(best)];
      if (mag > best_mag) best = k;
    }
    const double freq = a.class_freqs_hz[static_cast<size_t>(w.label)];
    CHECK(best == static_cast<int>(std::lround(freq * win / spec.sample_rate_hz)));
  }

  // distinct classes land on distinct bins
  std::set<double> freqs(a.class_freqs_hz.begin(), a.class_freqs_hz.end());
  CHECK(freqs.size() == 3);
}

TEST_CASE("synth spec validation") {
  data::SynthSpec spec;
  spec.class_freqs_hz = {1.0, 1.0, 2.0, 3.0, 4.0, 5.0};  // duplicate
  CHECK_THROWS_AS((void)data::synth_generate(spec), Error);
  data::SynthSpec neg;
  neg.noise_sigma = -1;
  CHECK_THROWS_AS((void)data::synth_generate(neg), Error);
}

TEST_CASE("csv round trip") {
  data::SynthSpec spec;
  spec.classes = 2;
  spec.subjects = 2;
  spec.channels = 3;
  spec.windows_per_class_per_subject = 2;
  spec.seed = 9;
  data::SynthResult synth = data::synth_generate(spec);
  std::string path = temp_path("smld_test_roundtrip.csv");
  data::write_csv(path, synth.streams);
  std::vector<data::LabeledStream> loaded = data::load_csv_dataset(path);
  REQUIRE(loaded.size() == synth.streams.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].subject == synth.streams[i].subject);
    CHECK(loaded[i].labels == synth.streams[i].labels);
    // %.9g float formatting round-trips binary32 exactly
    CHECK(loaded[i].values.v == synth.streams[i].values.v);
  }
  fs::remove(path);
}

TEST_CASE("csv loader reports offending lines") {
  std::string path = temp_path("smld_test_bad.csv");

  SUBCASE("two well-formed rows make one subject of length two") {
    std::ofstream(path) << "subject,label,t,ch_0\n1,0,0.0,1.5\n1,0,0.1,2.5\n";
    auto streams = data::load_csv_dataset(path);
    REQUIRE(streams.size() == 1);
    CHECK(streams[0].samples() == 2);
  }

  SUBCASE("decreasing t names the line") {
    std::ofstream(path) << "subject,label,t,ch_0\n1,0,0.2,1.0\n1,0,0.1,1.0\n";
    try {
      (void)data::load_csv_dataset(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  SUBCASE("malformed number names the line") {
    std::ofstream(path) << "subject,label,t,ch_0\n1,0,0.0,oops\n";
    try {
      (void)data::load_csv_dataset(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  SUBCASE("missing channel column is a schema error") {
    std::ofstream(path) << "subject,label,t,ch_0\n1,0,0.0,1.0\n";
    data::CsvSchema schema;
    schema.expected_channels = 2;
    CHECK_THROWS_AS((void)data::load_csv_dataset(path, schema), Error);
  }

  SUBCASE("wrong header is rejected") {
    std::ofstream(path) << "subject,label,time,ch_0\n";
    CHECK_THROWS_AS((void)data::load_csv_dataset(path), Error);
  }

  SUBCASE("unknown label under a declared class count") {
    std::ofstream(path) << "subject,label,t,ch_0\n1,7,0.0,1.0\n";
    data::CsvSchema schema;
    schema.declared_classes = 3;
    CHECK_THROWS_AS((void)data::load_csv_dataset(path, schema), Error);
  }

  SUBCASE("interleaved subject blocks are rejected") {
    std::ofstream(path) << "subject,label,t,ch_0\n1,0,0.0,1.0\n2,0,0.0,1.0\n1,0,0.1,1.0\n";
    CHECK_THROWS_AS((void)data::load_csv_dataset(path), Error);
  }

  fs::remove(path);
}
