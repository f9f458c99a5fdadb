#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "smld/core/tensor.hpp"

namespace smld {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One named entry per optimizer step. A null grad means "no gradient reached
// this parameter" and is treated as zero.
struct ParamGrad {
  std::string name;
  Tensor<float>* param = nullptr;
  const Tensor<float>* grad = nullptr;
};

// Standard Adam with bias correction. Moment slots are keyed by parameter
// name and created lazily; updates are deterministic given inputs.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<ParamGrad>& entries);

  int64_t steps() const { return step_; }

  const AdamConfig& config() const { return cfg_; }

  void reset() {
    slots_.clear();
    step_ = 0;
  }

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
  };

  AdamConfig cfg_;
  std::unordered_map<std::string, Slot> slots_;
  int64_t step_ = 0;
};

}  // namespace smld
