#include <doctest.h>

#include <vector>

#include "smld/core/rng.hpp"
#include "smld/metrics/metrics.hpp"

using smld::Rng;
namespace metrics = smld::metrics;

namespace {

// Per-sample brute-force oracle: walks the raw label/prediction vectors and
// counts TP/FP/FN per class directly.
struct BruteForce {
  double accuracy = 0;
  double f1_macro = 0;
};

BruteForce brute_force(const std::vector<int>& truth, const std::vector<int>& pred, int classes) {
  BruteForce out;
  int correct = 0;
  for (size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == pred[i]) ++correct;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  double f1_sum = 0;
  for (int c = 0; c < classes; ++c) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c && truth[i] == c) ++tp;
      if (pred[i] == c && truth[i] != c) ++fp;
      if (pred[i] != c && truth[i] == c) ++fn;
    }
    double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    f1_sum += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  out.f1_macro = f1_sum / classes;
  return out;
}

metrics::ConfusionMatrix from_vectors(const std::vector<int>& truth, const std::vector<int>& pred,
                                      int classes) {
  metrics::ConfusionMatrix cm(classes);
  for (size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

}  // namespace

TEST_CASE("perfect and broken classifiers") {
  metrics::ConfusionMatrix diag(3);
  diag.add(0, 0, 5);
  diag.add(1, 1, 2);
  diag.add(2, 2, 9);
  CHECK(metrics::accuracy(diag) == 1.0);
  CHECK(metrics::f1_macro(diag) == 1.0);

  metrics::ConfusionMatrix off(2);
  off.add(0, 1, 3);
  off.add(1, 0, 4);
  CHECK(metrics::accuracy(off) == 0.0);
}

TEST_CASE("hand-checked 2-class fixture") {
  metrics::ConfusionMatrix cm(2);
  cm.add(0, 0, 8);
  cm.add(0, 1, 2);
  cm.add(1, 0, 4);
  cm.add(1, 1, 6);
  CHECK(metrics::accuracy(cm) == doctest::Approx(0.7));
  CHECK(metrics::f1_macro(cm) == doctest::Approx(0.6969696969696968).epsilon(1e-9));
  auto scores = metrics::per_class_scores(cm);
  CHECK(scores[0].precision == doctest::Approx(8.0 / 12.0));
  CHECK(scores[0].recall == doctest::Approx(0.8));
  CHECK(scores[1].precision == doctest::Approx(0.75));
  CHECK(scores[1].recall == doctest::Approx(0.6));
}

TEST_CASE("a class never predicted and never true contributes zero") {
  metrics::ConfusionMatrix cm(3);
  cm.add(0, 0, 4);
  cm.add(1, 1, 4);
  // class 2 untouched
  CHECK(metrics::f1_macro(cm) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty matrix is an error") {
  metrics::ConfusionMatrix cm(2);
  CHECK_THROWS_AS((void)metrics::accuracy(cm), smld::Error);
  CHECK_THROWS_AS(cm.add(2, 0), smld::Error);
}

TEST_CASE("agreement with the per-sample oracle on randomized settings") {
  Rng rng(404);
  for (int rep = 0; rep < 100; ++rep) {
    const int classes = 2 + static_cast<int>(rng.uniform_int(9));
    const int n = 1 + static_cast<int>(rng.uniform_int(1000));
    std::vector<int> truth(static_cast<size_t>(n)), pred(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      truth[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(classes));
      // skewed predictions so some classes never appear
      pred[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(classes));
      if (rng.uniform() < 0.3) pred[static_cast<size_t>(i)] = truth[static_cast<size_t>(i)];
    }
    metrics::ConfusionMatrix cm = from_vectors(truth, pred, classes);
    BruteForce expected = brute_force(truth, pred, classes);
    CHECK(metrics::accuracy(cm) == expected.accuracy);
    CHECK(metrics::f1_macro(cm) == doctest::Approx(expected.f1_macro).epsilon(1e-12));
  }
}

TEST_CASE("macro F1 is invariant under simultaneous class permutation") {
  Rng rng(99);
  const int classes = 5, n = 400;
  std::vector<int> truth(static_cast<size_t>(n)), pred(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    truth[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(classes));
    pred[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(classes));
  }
  std::vector<int> perm = {3, 0, 4, 1, 2};
  std::vector<int> truth_p(static_cast<size_t>(n)), pred_p(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    truth_p[static_cast<size_t>(i)] = perm[static_cast<size_t>(truth[static_cast<size_t>(i)])];
    pred_p[static_cast<size_t>(i)] = perm[static_cast<size_t>(pred[static_cast<size_t>(i)])];
  }
  double a = metrics::f1_macro(from_vectors(truth, pred, classes));
  double b = metrics::f1_macro(from_vectors(truth_p, pred_p, classes));
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}
