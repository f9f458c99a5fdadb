#include "smld/core/adam.hpp"

#include <cmath>

#include "smld/core/error.hpp"

namespace smld {

void Adam::step(const std::vector<ParamGrad>& entries) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (const ParamGrad& e : entries) {
    Tensor<float>& p = *e.param;
    if (e.grad && !e.grad->same_shape(p)) {
      fail_data("adam: gradient shape " + e.grad->shape_str() + " does not match parameter '" +
                e.name + "' " + p.shape_str());
    }
    Slot& slot = slots_[e.name];
    if (slot.m.empty()) {
      slot.m.assign(p.v.size(), 0.0);
      slot.v.assign(p.v.size(), 0.0);
    } else if (slot.m.size() != p.v.size()) {
      fail_data("adam: parameter '" + e.name + "' changed size between steps");
    }
    for (size_t i = 0; i < p.v.size(); ++i) {
      double g = e.grad ? static_cast<double>(e.grad->v[i]) : 0.0;
      slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g;
      slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = slot.m[i] / bc1;
      double vhat = slot.v[i] / bc2;
      p.v[i] = static_cast<float>(static_cast<double>(p.v[i]) -
                                  cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

}  // namespace smld
