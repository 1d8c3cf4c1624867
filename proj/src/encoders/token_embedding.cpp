#include "iosp/encoders/token_embedding.hpp"

#include <cctype>
#include <cmath>

#include "iosp/errors.hpp"
#include "iosp/numkernel/rng.hpp"

namespace iosp::enc {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TokenEmbedding tokenize_embed(std::string_view text, std::uint64_t seed, std::size_t context_len,
                              std::size_t dim) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw SetupError("tokenize_embed: empty text");
  if (tokens.size() > context_len) {
    throw CapacityError("tokenize_embed: " + std::to_string(tokens.size()) +
                        " tokens exceed context length " + std::to_string(context_len));
  }
  TokenEmbedding out{num::Tensor::matrix(context_len, dim), tokens.size()};
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    num::Rng rng(num::splitmix64(num::splitmix64(seed) ^ fnv1a64(tokens[r])));
    for (double& x : out.matrix.row(r)) x = rng.uniform(-1.0, 1.0) * scale;
  }
  return out;
}

}  // namespace iosp::enc
