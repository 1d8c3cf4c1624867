#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "iosp/numkernel/autodiff.hpp"
#include "iosp/numkernel/tensor.hpp"

namespace iosp::enc {

// Frozen reference text encoder:
//   encode(E) = W2 * tanh(W1 * mean_rows(E) + b1) + b2
// The mean runs over all context rows, padding included, so a bias added to
// the whole padded matrix shifts every class encoding the same way.
class TextEncoder {
 public:
  TextEncoder(std::size_t dim, std::size_t context_len, std::uint64_t seed);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t context_len() const noexcept { return context_len_; }
  std::uint64_t seed() const noexcept { return seed_; }

  num::Tensor encode(const num::Tensor& tokens) const;

  // Weights placed on a tape once and reused for every encode on that tape.
  struct Bound {
    num::Var w1, b1, w2, b2;
  };
  Bound bind(num::Tape& tape) const;
  num::Var encode(const Bound& weights, num::Var tokens) const;

  const num::Tensor& w1() const noexcept { return w1_; }
  const num::Tensor& b1() const noexcept { return b1_; }
  const num::Tensor& w2() const noexcept { return w2_; }
  const num::Tensor& b2() const noexcept { return b2_; }

  std::string digest() const;

 private:
  void check_shape(const num::Tensor& tokens) const;

  std::size_t dim_;
  std::size_t context_len_;
  std::uint64_t seed_;
  num::Tensor w1_, b1_, w2_, b2_;
};

}  // namespace iosp::enc
