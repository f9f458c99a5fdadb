#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "smld/core/rng.hpp"
#include "smld/core/tensor.hpp"

using smld::Error;
using smld::Rng;
using smld::Tensor;

TEST_CASE("tensor shape bookkeeping") {
  Tensor<float> t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.ndim() == 2);
  t.at(1, 2) = 5.0f;
  CHECK(t.v[5] == 5.0f);

  Tensor<double> t3({2, 2, 2}, 1.0);
  CHECK(t3.numel() == 8);
  CHECK(t3.at(1, 1, 1) == 1.0);
}

TEST_CASE("tensor from() rejects mismatched value counts") {
  CHECK_THROWS_AS((void)Tensor<float>::from({2, 2}, {1.0f, 2.0f}), Error);
  CHECK_THROWS_AS((void)Tensor<float>({0, 3}), Error);
}

TEST_CASE("finiteness scan") {
  Tensor<float> ok({3}, 1.0f);
  CHECK(ok.all_finite());
  ok.v[1] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(ok.all_finite());
  ok.v[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(ok.all_finite());
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 16; ++i) differs = differs || (a2.next_u64() != c.next_u64());
  CHECK(differs);
}

TEST_CASE("rng normal moments are sane") {
  Rng rng(1);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("rng shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> xs(100);
  for (int i = 0; i < 100; ++i) xs[static_cast<size_t>(i)] = i;
  rng.shuffle(xs);
  std::vector<int> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);
}
