#pragma once

#include <cstdint>
#include <vector>

#include "cppf/autograd.hpp"
#include "cppf/model.hpp"

namespace cppf {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with a fixed learning rate and no weight decay. Each `step` counts
/// as one optimizer application on the model (its version goes up by one).
class Adam {
 public:
  explicit Adam(const MaskedLm& model, AdamSettings settings = {});

  void step(MaskedLm& model, const GradientSet& grads, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  AdamSettings s_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

}  // namespace cppf
