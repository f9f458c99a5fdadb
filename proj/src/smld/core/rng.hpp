#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace smld {

// splitmix64 stream. Self-contained so that sequences are identical across
// platforms and standard-library versions; std::shuffle and the std
// distributions are implementation-defined and would break run-to-run
// reproducibility guarantees between toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : state_(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)) {
    // decorrelate nearby seeds
    (void)next_u64();
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int64_t uniform_int(int64_t n) {
    return n <= 1 ? 0 : static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
  }

  // Box-Muller; pairs are cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates with our own draws.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (int64_t i = static_cast<int64_t>(xs.size()) - 1; i > 0; --i) {
      int64_t j = uniform_int(i + 1);
      std::swap(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace smld
