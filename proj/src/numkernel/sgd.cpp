#include "iosp/numkernel/sgd.hpp"

#include "iosp/errors.hpp"

namespace iosp::num {

void sgd_step(ParameterStore& params, const Gradients& grads, SgdState& state) {
  const SgdConfig& cfg = state.config();
  for (const auto& [id, grad] : grads) {
    Tensor& param = params.value(id);
    require_same_shape(param, grad, "sgd_step");
    auto [it, inserted] = state.velocities().try_emplace(id, param.shape(), 0.0);
    Tensor& v = it->second;
    require_same_shape(param, v, "sgd_step velocity");
    for (std::size_t i = 0; i < param.size(); ++i) {
      v[i] = cfg.momentum * v[i] + grad[i] + cfg.weight_decay * param[i];
      param[i] -= cfg.lr * v[i];
    }
  }
}

}  // namespace iosp::num
