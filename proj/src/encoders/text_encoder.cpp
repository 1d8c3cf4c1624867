#include "iosp/encoders/text_encoder.hpp"

#include <cmath>

#include "iosp/errors.hpp"
#include "iosp/numkernel/digest.hpp"
#include "iosp/numkernel/rng.hpp"

namespace iosp::enc {

namespace {

num::Tensor uniform_tensor(std::vector<std::size_t> shape, double bound, num::Rng& rng) {
  num::Tensor t(std::move(shape), 0.0);
  for (double& x : t.values()) x = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

TextEncoder::TextEncoder(std::size_t dim, std::size_t context_len, std::uint64_t seed)
    : dim_(dim), context_len_(context_len), seed_(seed) {
  if (dim == 0 || context_len == 0) throw SetupError("TextEncoder: dimensions must be positive");
  num::Rng rng(num::derive_seed(seed, "text-encoder"));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  w1_ = uniform_tensor({dim, dim}, bound, rng);
  b1_ = uniform_tensor({dim}, bound, rng);
  w2_ = uniform_tensor({dim, dim}, bound, rng);
  b2_ = uniform_tensor({dim}, bound, rng);
}

void TextEncoder::check_shape(const num::Tensor& tokens) const {
  if (tokens.rank() != 2 || tokens.rows() != context_len_ || tokens.cols() != dim_) {
    throw ContractError("text_encode: expected [" + std::to_string(context_len_) + "x" +
                        std::to_string(dim_) + "], got " + tokens.shape_string());
  }
}

num::Tensor TextEncoder::encode(const num::Tensor& tokens) const {
  num::Tape tape;
  const Bound weights = bind(tape);
  return encode(weights, tape.constant(tokens)).value();
}

TextEncoder::Bound TextEncoder::bind(num::Tape& tape) const {
  return {tape.constant(w1_), tape.constant(b1_), tape.constant(w2_), tape.constant(b2_)};
}

num::Var TextEncoder::encode(const Bound& weights, num::Var tokens) const {
  check_shape(tokens.value());
  const num::Var pooled = num::mean_rows(tokens);
  const num::Var hidden = num::tanh(num::add(num::matvec(weights.w1, pooled), weights.b1));
  return num::add(num::matvec(weights.w2, hidden), weights.b2);
}

std::string TextEncoder::digest() const {
  return num::sha256_hex(w1_) + num::sha256_hex(b1_) + num::sha256_hex(w2_) +
         num::sha256_hex(b2_);
}

}  // namespace iosp::enc
