#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "smld/core/error.hpp"

namespace smld {

// Dense row-major n-d array. Invariant: product(shape) == v.size().
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;

  explicit Tensor(std::vector<int> shape_in, T fill = T{})
      : shape(std::move(shape_in)) {
    v.assign(static_cast<size_t>(checked_numel(shape)), fill);
  }

  static Tensor from(std::vector<int> shape_in, std::vector<T> values) {
    Tensor t;
    t.shape = std::move(shape_in);
    t.v = std::move(values);
    if (checked_numel(t.shape) != static_cast<int64_t>(t.v.size())) {
      fail_data("tensor: shape " + shape_str(t.shape) + " does not match " +
                std::to_string(t.v.size()) + " values");
    }
    return t;
  }

  int ndim() const { return static_cast<int>(shape.size()); }

  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& at(int i) { return v[static_cast<size_t>(i)]; }
  const T& at(int i) const { return v[static_cast<size_t>(i)]; }

  T& at(int i, int j) { return v[static_cast<size_t>(i) * dim(1) + j]; }
  const T& at(int i, int j) const {
    return v[static_cast<size_t>(i) * dim(1) + j];
  }

  T& at(int i, int j, int k) {
    return v[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  const T& at(int i, int j, int k) const {
    return v[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (const T& x : v) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  Tensor<T> zeros_like() const { return Tensor<T>(shape); }

  static std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
  }

  std::string shape_str() const { return shape_str(shape); }

  static int64_t checked_numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) fail_data("tensor: non-positive extent in shape " + shape_str(s));
      n *= d;
    }
    return n;
  }
};

template <typename T>
Tensor<T> scalar_tensor(T x) {
  return Tensor<T>::from({1}, {x});
}

}  // namespace smld
