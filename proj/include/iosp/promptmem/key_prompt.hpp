#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "iosp/encoders/text_encoder.hpp"
#include "iosp/numkernel/autodiff.hpp"
#include "iosp/promptmem/class_bank.hpp"

namespace iosp::pm {

struct KeyPromptPair {
  num::ParamId key = 0;     // (dim)
  num::ParamId prompt = 0;  // (context_len x dim)
  std::size_t owner_session = 0;
  std::size_t index_in_session = 0;
  // Class index the pair was seeded from; absent for random initialization.
  std::ptrdiff_t source_class = -1;
};

// pairs[session][index]
using PairTable = std::vector<std::vector<KeyPromptPair>>;

enum class PairInitMode {
  class_embedding,  // key = encode(E_j), prompt = E_j for a random class j of the session
  random,           // both drawn uniform(-1, 1) / sqrt(dim)
};

std::string key_name(std::size_t session, std::size_t index);
std::string prompt_name(std::size_t session, std::size_t index);

// Picks class indices for `count` pairs: a seeded permutation prefix while
// classes remain, then uniform draws with replacement.
std::vector<std::size_t> choose_pair_classes(std::size_t count, std::size_t classes,
                                             std::uint64_t seed);

// Creates the pairs of the newest session in `bank` and appends them to `pairs`.
// Keys and prompts are copies; they train independently of the embeddings.
void init_key_prompt_pairs(std::size_t count, const ClassTokenBank& bank,
                           const enc::TextEncoder& encoder, std::uint64_t seed, PairInitMode mode,
                           PairTable& pairs, num::ParameterStore& store);

}  // namespace iosp::pm
