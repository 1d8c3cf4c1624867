#pragma once

#include <map>

#include "iosp/numkernel/autodiff.hpp"

namespace iosp::num {

struct SgdConfig {
  double lr = 0.002;
  double momentum = 0.9;
  double weight_decay = 0.0005;
};

// Heavy-ball SGD with coupled weight decay:
//   v <- momentum * v + grad + weight_decay * param
//   param <- param - lr * v
// Velocities start at zero the first time a parameter is stepped.
class SgdState {
 public:
  SgdState() = default;
  explicit SgdState(SgdConfig config) : config_(config) {}

  const SgdConfig& config() const noexcept { return config_; }
  const std::map<ParamId, Tensor>& velocities() const noexcept { return velocity_; }
  std::map<ParamId, Tensor>& velocities() noexcept { return velocity_; }

 private:
  SgdConfig config_;
  std::map<ParamId, Tensor> velocity_;
};

// Steps every parameter that has an entry in `grads`.
void sgd_step(ParameterStore& params, const Gradients& grads, SgdState& state);

}  // namespace iosp::num
