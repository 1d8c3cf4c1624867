#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iosp/numkernel/autodiff.hpp"
#include "iosp/numkernel/rng.hpp"

namespace iosp::pm {

// FC1: W1 x + b1
// FC2: W2 relu(W1 x + b1) + b2
// RES2: FC2 plus x added to the second layer's output
enum class KeyMapVariant { fc1, fc2, res2 };

std::string to_string(KeyMapVariant v);
KeyMapVariant keymap_variant_from_string(const std::string& s);  // throws std::invalid_argument

class KeyMap {
 public:
  KeyMap() = default;

  // Adds freshly initialized weights (uniform +-1/sqrt(dim)) to `store`.
  static KeyMap create(KeyMapVariant variant, std::size_t dim, num::ParameterStore& store,
                       num::Rng& rng);
  // Looks up weights previously created in `store`.
  static KeyMap attach(KeyMapVariant variant, const num::ParameterStore& store);

  KeyMapVariant variant() const noexcept { return variant_; }
  const std::vector<num::ParamId>& params() const noexcept { return params_; }

  num::Var apply(num::Tape& tape, const num::ParameterStore& store, num::Var feature) const;
  num::Tensor apply(const num::ParameterStore& store, std::span<const double> feature) const;

 private:
  KeyMapVariant variant_ = KeyMapVariant::fc1;
  std::vector<num::ParamId> params_;  // w1, b1[, w2, b2]
};

}  // namespace iosp::pm
