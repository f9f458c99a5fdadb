#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace smld::fft {

// One-sided spectrum of a real signal of length L: bins 0..floor(L/2).
// For real input, bin 0 (and bin L/2 when L is even) is purely real.
struct Spectrum {
  std::vector<double> re;
  std::vector<double> im;

  int bins() const { return static_cast<int>(re.size()); }
};

inline int one_sided_bins(int len) { return len / 2 + 1; }

// Unnormalized forward DFT of real input, one-sided.
Spectrum rfft(const std::vector<double>& x);

// sqrt(sum re^2 + sum im^2)
double spectrum_frobenius(const Spectrum& s);

// In-place unnormalized complex DFT, any size (radix-2 or Bluestein).
void dft(std::vector<std::complex<double>>& a, bool inverse);

// Batched one-sided transforms over contiguous rows. Input rows of length
// `len`; each output row holds 2*bins values laid out as the real block
// followed by the imaginary block. Math is done in double for both overloads.
void rfft_rows(const double* in, double* out, int64_t rows, int len);
void rfft_rows(const float* in, float* out, int64_t rows, int len);

// Adjoint of the one-sided map: cotangent rows of 2*bins values back to rows
// of length `len`. This is the exact transpose of rfft_rows as a real-linear
// map, so reverse-mode gradients through rfft are adjoint(cotangent).
void rfft_adjoint_rows(const double* cot, double* out, int64_t rows, int len);
void rfft_adjoint_rows(const float* cot, float* out, int64_t rows, int len);

}  // namespace smld::fft
