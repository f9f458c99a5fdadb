#include "smld/core/fft.hpp"

#include <cmath>
#include <map>
#include <memory>

#include "smld/core/error.hpp"

namespace smld::fft {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cplx = std::complex<double>;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 Cooley-Tukey with a per-size twiddle table.
struct Pow2Plan {
  int n = 0;
  std::vector<int> bitrev;
  std::vector<cplx> tw;  // tw[j] = exp(-2*pi*i*j/n), j < n/2

  explicit Pow2Plan(int size) : n(size), bitrev(static_cast<size_t>(size)) {
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
      bitrev[static_cast<size_t>(i)] = r;
    }
    tw.resize(static_cast<size_t>(n / 2 > 0 ? n / 2 : 1));
    for (int j = 0; j < n / 2; ++j) {
      double ang = -2.0 * kPi * j / n;
      tw[static_cast<size_t>(j)] = cplx(std::cos(ang), std::sin(ang));
    }
  }

  void run(cplx* a, bool inverse) const {
    for (int i = 0; i < n; ++i) {
      int r = bitrev[static_cast<size_t>(i)];
      if (i < r) std::swap(a[i], a[r]);
    }
    for (int len = 2; len <= n; len <<= 1) {
      int half = len / 2;
      int step = n / len;
      for (int i = 0; i < n; i += len) {
        for (int j = 0; j < half; ++j) {
          cplx w = tw[static_cast<size_t>(j * step)];
          if (inverse) w = std::conj(w);
          cplx u = a[i + j];
          cplx t = a[i + j + half] * w;
          a[i + j] = u + t;
          a[i + j + half] = u - t;
        }
      }
    }
  }
};

// Bluestein chirp-z for arbitrary sizes, built on a pow2 convolution.
struct BluesteinPlan {
  int n = 0;
  int m = 0;                 // pow2 convolution size >= 2n-1
  std::vector<cplx> chirp;   // chirp[k] = exp(-i*pi*k^2/n)
  std::vector<cplx> bfft;    // FFT of the wrapped conjugate chirp
  std::unique_ptr<Pow2Plan> conv;

  explicit BluesteinPlan(int size) : n(size) {
    m = next_pow2(2 * n - 1);
    conv = std::make_unique<Pow2Plan>(m);
    chirp.resize(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      // k^2 mod 2n keeps the argument small for large k
      int64_t e = (static_cast<int64_t>(k) * k) % (2LL * n);
      double ang = -kPi * static_cast<double>(e) / n;
      chirp[static_cast<size_t>(k)] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> b(static_cast<size_t>(m), cplx(0, 0));
    b[0] = std::conj(chirp[0]);
    for (int k = 1; k < n; ++k) {
      b[static_cast<size_t>(k)] = std::conj(chirp[static_cast<size_t>(k)]);
      b[static_cast<size_t>(m - k)] = std::conj(chirp[static_cast<size_t>(k)]);
    }
    conv->run(b.data(), false);
    bfft = std::move(b);
  }

  void run(cplx* x) const {
    std::vector<cplx> a(static_cast<size_t>(m), cplx(0, 0));
    for (int k = 0; k < n; ++k) a[static_cast<size_t>(k)] = x[k] * chirp[static_cast<size_t>(k)];
    conv->run(a.data(), false);
    for (int k = 0; k < m; ++k) a[static_cast<size_t>(k)] *= bfft[static_cast<size_t>(k)];
    conv->run(a.data(), true);
    double inv_m = 1.0 / m;
    for (int k = 0; k < n; ++k) x[k] = a[static_cast<size_t>(k)] * inv_m * chirp[static_cast<size_t>(k)];
  }
};

struct Plan {
  std::unique_ptr<Pow2Plan> pow2;
  std::unique_ptr<BluesteinPlan> bluestein;
};

const Plan& plan_for(int n) {
  thread_local std::map<int, std::unique_ptr<Plan>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    auto plan = std::make_unique<Plan>();
    if (is_pow2(n)) {
      plan->pow2 = std::make_unique<Pow2Plan>(n);
    } else {
      plan->bluestein = std::make_unique<BluesteinPlan>(n);
    }
    it = cache.emplace(n, std::move(plan)).first;
  }
  return *it->second;
}

// Forward DFT of any size. Inverse (unnormalized) via conjugation.
void dft_forward(cplx* a, int n) {
  if (n == 1) return;
  const Plan& p = plan_for(n);
  if (p.pow2) {
    p.pow2->run(a, false);
  } else {
    p.bluestein->run(a);
  }
}

template <typename T>
void rfft_rows_impl(const T* in, T* out, int64_t rows, int len) {
  if (len < 1) fail_data("rfft: signal length must be >= 1");
  const int nb = one_sided_bins(len);
  std::vector<cplx> buf(static_cast<size_t>(len));
  for (int64_t r = 0; r < rows; ++r) {
    const T* x = in + r * len;
    for (int i = 0; i < len; ++i) buf[static_cast<size_t>(i)] = cplx(static_cast<double>(x[i]), 0.0);
    dft_forward(buf.data(), len);
    T* re = out + r * (2LL * nb);
    T* im = re + nb;
    for (int k = 0; k < nb; ++k) {
      re[k] = static_cast<T>(buf[static_cast<size_t>(k)].real());
      im[k] = static_cast<T>(buf[static_cast<size_t>(k)].imag());
    }
    // exact for real input; clears FFT rounding dust
    im[0] = T(0);
    if (len % 2 == 0) im[nb - 1] = T(0);
  }
}

template <typename T>
void rfft_adjoint_rows_impl(const T* cot, T* out, int64_t rows, int len) {
  if (len < 1) fail_data("rfft adjoint: signal length must be >= 1");
  const int nb = one_sided_bins(len);
  std::vector<cplx> buf(static_cast<size_t>(len));
  for (int64_t r = 0; r < rows; ++r) {
    const T* re = cot + r * (2LL * nb);
    const T* im = re + nb;
    for (int k = 0; k < len; ++k) buf[static_cast<size_t>(k)] = cplx(0, 0);
    for (int k = 0; k < nb; ++k) {
      double a = static_cast<double>(re[k]);
      double b = static_cast<double>(im[k]);
      // the forward map pins these imaginary bins to zero
      if (k == 0 || (len % 2 == 0 && k == nb - 1)) b = 0.0;
      buf[static_cast<size_t>(k)] = cplx(a, b);
    }
    // adjoint of x -> one-sided DFT bins: g_n = Re sum_k c_k e^{+2 pi i k n / L}.
    // The symmetric interior bins are NOT mirrored here: each one-sided bin is
    // read exactly once by downstream consumers, so the transpose takes each
    // cotangent exactly once. Computed as conj(F(conj(c))).
    for (auto& z : buf) z = std::conj(z);
    dft_forward(buf.data(), len);
    T* g = out + r * len;
    for (int ni = 0; ni < len; ++ni) {
      g[ni] = static_cast<T>(std::conj(buf[static_cast<size_t>(ni)]).real());
    }
  }
}

}  // namespace

Spectrum rfft(const std::vector<double>& x) {
  if (x.empty()) fail_data("rfft: empty signal");
  const int len = static_cast<int>(x.size());
  const int nb = one_sided_bins(len);
  std::vector<double> flat(static_cast<size_t>(2 * nb));
  rfft_rows(x.data(), flat.data(), 1, len);
  Spectrum s;
  s.re.assign(flat.begin(), flat.begin() + nb);
  s.im.assign(flat.begin() + nb, flat.end());
  return s;
}

double spectrum_frobenius(const Spectrum& s) {
  double acc = 0;
  for (double x : s.re) acc += x * x;
  for (double x : s.im) acc += x * x;
  return std::sqrt(acc);
}

void dft(std::vector<std::complex<double>>& a, bool inverse) {
  if (a.empty()) return;
  if (!inverse) {
    dft_forward(a.data(), static_cast<int>(a.size()));
    return;
  }
  for (auto& z : a) z = std::conj(z);
  dft_forward(a.data(), static_cast<int>(a.size()));
  double inv_n = 1.0 / static_cast<double>(a.size());
  for (auto& z : a) z = std::conj(z) * inv_n;
}

void rfft_rows(const double* in, double* out, int64_t rows, int len) {
  rfft_rows_impl(in, out, rows, len);
}
void rfft_rows(const float* in, float* out, int64_t rows, int len) {
  rfft_rows_impl(in, out, rows, len);
}
void rfft_adjoint_rows(const double* cot, double* out, int64_t rows, int len) {
  rfft_adjoint_rows_impl(cot, out, rows, len);
}
void rfft_adjoint_rows(const float* cot, float* out, int64_t rows, int len) {
  rfft_adjoint_rows_impl(cot, out, rows, len);
}

}  // namespace smld::fft
