#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "smld/core/fft.hpp"
#include "smld/core/rng.hpp"

using smld::Rng;
namespace fft = smld::fft;

namespace {

// Independent O(L^2) oracle: direct evaluation of the DFT sum.
fft::Spectrum naive_rfft(const std::vector<double>& x) {
  const int len = static_cast<int>(x.size());
  const int nb = fft::one_sided_bins(len);
  fft::Spectrum s;
  s.re.assign(static_cast<size_t>(nb), 0.0);
  s.im.assign(static_cast<size_t>(nb), 0.0);
  for (int k = 0; k < nb; ++k) {
    double re = 0, im = 0;
    for (int n = 0; n < len; ++n) {
      double ang = -2.0 * M_PI * k * n / len;
      re += x[static_cast<size_t>(n)] * std::cos(ang);
      im += x[static_cast<size_t>(n)] * std::sin(ang);
    }
    s.re[static_cast<size_t>(k)] = re;
    s.im[static_cast<size_t>(k)] = im;
  }
  return s;
}

std::vector<double> random_signal(int len, Rng& rng) {
  std::vector<double> x(static_cast<size_t>(len));
  for (double& v : x) v = rng.uniform(-2.0, 2.0);
  return x;
}

}  // namespace

TEST_CASE("rfft fixture values") {
  fft::Spectrum s = fft::rfft({1, 0, 0, 0});
  REQUIRE(s.bins() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(s.re[static_cast<size_t>(k)] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.im[static_cast<size_t>(k)] == doctest::Approx(0.0).epsilon(1e-12));
  }

  s = fft::rfft({1, 1, 1, 1});
  CHECK(s.re[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.re[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.re[2] == doctest::Approx(0.0).epsilon(1e-12));

  s = fft::rfft({0, 0});
  CHECK(s.re[0] == 0.0);
  CHECK(s.re[1] == 0.0);
  CHECK(s.im[0] == 0.0);
  CHECK(s.im[1] == 0.0);
}

TEST_CASE("rfft matches the naive DFT for every length 1..64") {
  Rng rng(2024);
  for (int len = 1; len <= 64; ++len) {
    std::vector<double> x = random_signal(len, rng);
    fft::Spectrum fast = fft::rfft(x);
    fft::Spectrum slow = naive_rfft(x);
    REQUIRE(fast.bins() == slow.bins());
    for (int k = 0; k < fast.bins(); ++k) {
      CHECK(std::abs(fast.re[static_cast<size_t>(k)] - slow.re[static_cast<size_t>(k)]) < 1e-9);
      CHECK(std::abs(fast.im[static_cast<size_t>(k)] - slow.im[static_cast<size_t>(k)]) < 1e-9);
    }
  }
}

TEST_CASE("real-input symmetry pins imaginary DC and Nyquist bins to zero") {
  Rng rng(7);
  for (int len : {2, 8, 12, 17, 33, 64}) {
    fft::Spectrum s = fft::rfft(random_signal(len, rng));
    CHECK(s.im[0] == 0.0);
    if (len % 2 == 0) CHECK(s.im[static_cast<size_t>(s.bins() - 1)] == 0.0);
  }
}

TEST_CASE("Parseval over the reconstructed two-sided spectrum") {
  Rng rng(99);
  for (int len : {1, 2, 3, 8, 13, 50, 64}) {
    std::vector<double> x = random_signal(len, rng);
    fft::Spectrum s = fft::rfft(x);
    // rebuild |X_k|^2 for k = 0..L-1 via conjugate symmetry
    double spec_energy = 0;
    for (int k = 0; k < len; ++k) {
      int idx = k < s.bins() ? k : len - k;
      spec_energy += s.re[static_cast<size_t>(idx)] * s.re[static_cast<size_t>(idx)] +
                     s.im[static_cast<size_t>(idx)] * s.im[static_cast<size_t>(idx)];
    }
    double time_energy = 0;
    for (double v : x) time_energy += v * v;
    CHECK(spec_energy ==
          doctest::Approx(len * time_energy).epsilon(1e-6));
  }
}

TEST_CASE("spectrum frobenius fixture") {
  fft::Spectrum s;
  s.re = {1, 1};
  s.im = {0, 1};
  CHECK(fft::spectrum_frobenius(s) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("batched row transform agrees with the single-signal path") {
  Rng rng(3);
  const int len = 25, rows = 4;
  std::vector<double> in(static_cast<size_t>(rows * len));
  for (double& v : in) v = rng.uniform(-1.0, 1.0);
  const int nb = fft::one_sided_bins(len);
  std::vector<double> out(static_cast<size_t>(rows * 2 * nb));
  fft::rfft_rows(in.data(), out.data(), rows, len);
  for (int r = 0; r < rows; ++r) {
    std::vector<double> x(in.begin() + r * len, in.begin() + (r + 1) * len);
    fft::Spectrum s = fft::rfft(x);
    for (int k = 0; k < nb; ++k) {
      CHECK(out[static_cast<size_t>(r * 2 * nb + k)] ==
            doctest::Approx(s.re[static_cast<size_t>(k)]).epsilon(1e-12));
      CHECK(out[static_cast<size_t>(r * 2 * nb + nb + k)] ==
            doctest::Approx(s.im[static_cast<size_t>(k)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("adjoint is the exact transpose of the forward map") {
  // <F(x), c> == <x, F*(c)> for random x, c over assorted lengths
  Rng rng(17);
  for (int len : {1, 2, 5, 16, 27, 31}) {
    const int nb = fft::one_sided_bins(len);
    std::vector<double> x = random_signal(len, rng);
    std::vector<double> fx(static_cast<size_t>(2 * nb));
    fft::rfft_rows(x.data(), fx.data(), 1, len);
    std::vector<double> c(static_cast<size_t>(2 * nb));
    for (double& v : c) v = rng.uniform(-1.0, 1.0);
    // the forward image has no DC/Nyquist imaginary component
    c[static_cast<size_t>(nb)] = 0.0;
    if (len % 2 == 0) c[static_cast<size_t>(2 * nb - 1)] = 0.0;
    std::vector<double> adj(static_cast<size_t>(len));
    fft::rfft_adjoint_rows(c.data(), adj.data(), 1, len);
    double lhs = 0, rhs = 0;
    for (int i = 0; i < 2 * nb; ++i) lhs += fx[static_cast<size_t>(i)] * c[static_cast<size_t>(i)];
    for (int i = 0; i < len; ++i) rhs += x[static_cast<size_t>(i)] * adj[static_cast<size_t>(i)];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}
