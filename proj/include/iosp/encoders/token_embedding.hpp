#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "iosp/numkernel/tensor.hpp"

namespace iosp::enc {

// Padded (context_len x dim) token matrix. Rows at and beyond valid_len are
// zero when freshly tokenized.
struct TokenEmbedding {
  num::Tensor matrix;
  std::size_t valid_len = 0;

  std::size_t context_len() const noexcept { return matrix.rows(); }
  std::size_t dim() const noexcept { return matrix.cols(); }
};

std::uint64_t fnv1a64(std::string_view text);

// Lowercased, whitespace-separated tokens.
std::vector<std::string> tokenize(std::string_view text);

// Each token maps to a vector drawn uniform(-1, 1) / sqrt(dim) from a
// generator keyed by (seed, fnv1a64(token)). Throws CapacityError when the
// text has more than context_len tokens and SetupError when it has none.
TokenEmbedding tokenize_embed(std::string_view text, std::uint64_t seed, std::size_t context_len,
                              std::size_t dim);

}  // namespace iosp::enc
