#pragma once

#include <cmath>
#include <vector>

#include "smld/core/tape.hpp"
#include "smld/core/tensor.hpp"

namespace smld {

// Compares reverse-mode gradients against f64 central finite differences and
// returns the worst relative error over all input elements. `build` receives
// a fresh tape plus one leaf per input tensor and must return a scalar loss.
//
// Relative error uses max(1, |ad|, |fd|) in the denominator so that
// near-zero gradients are compared absolutely.
template <typename Builder>
double grad_check(Builder&& build, std::vector<Tensor<double>> inputs, double eps = 1e-6) {
  Tape<double> tape;
  std::vector<Val<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  Val<double> loss = build(tape, leaves);
  tape.backward(loss);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto l : leaves) analytic.push_back(tape.grad(l));

  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    Tape<double> t;
    std::vector<Val<double>> ls;
    ls.reserve(xs.size());
    for (const auto& x : xs) ls.push_back(t.leaf(x, false));
    return static_cast<double>(t.value(build(t, ls)).v[0]);
  };

  double worst = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (size_t j = 0; j < inputs[i].v.size(); ++j) {
      double orig = inputs[i].v[j];
      inputs[i].v[j] = orig + eps;
      double fp = eval(inputs);
      inputs[i].v[j] = orig - eps;
      double fm = eval(inputs);
      inputs[i].v[j] = orig;
      double fd = (fp - fm) / (2.0 * eps);
      double ad = analytic[i].v[j];
      double denom = std::max({1.0, std::abs(ad), std::abs(fd)});
      worst = std::max(worst, std::abs(ad - fd) / denom);
    }
  }
  return worst;
}

}  // namespace smld
