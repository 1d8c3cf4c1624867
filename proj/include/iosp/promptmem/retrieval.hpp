#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "iosp/encoders/token_embedding.hpp"
#include "iosp/numkernel/autodiff.hpp"
#include "iosp/promptmem/key_prompt.hpp"

namespace iosp::pm {

struct TopKEntry {
  std::size_t session = 0;  // 0-based
  std::size_t index = 0;    // 0-based within the session
  double similarity = 0.0;
  friend bool operator==(const TopKEntry&, const TopKEntry&) = default;
};

using TopKSelection = std::vector<TopKEntry>;

// sims[session][index]; sessions may hold different numbers of pairs.
using SimilarityTable = std::vector<std::vector<double>>;

// Flattens session-major, keeps the k largest and orders them by descending
// similarity, ties going to the smaller flattened position. Throws SetupError
// when the pool holds fewer than k entries and std::invalid_argument on
// non-finite similarities.
TopKSelection topk_2d(const SimilarityTable& sims, std::size_t k);

// Row/column of the 1-based flattened position z in a table with m columns:
// Q(z) = floor((z - 1) / m) + 1, R(z) = z - (Q(z) - 1) m.
std::pair<std::size_t, std::size_t> quotient_remainder(std::size_t z, std::size_t m);

// Cosine similarity of the image key against every key of sessions 0..through.
SimilarityTable key_similarities(std::span<const double> image_key, const PairTable& pairs,
                                 const num::ParameterStore& store, std::size_t through);

// Softmax over the selected similarities.
std::vector<double> prompt_weights(const TopKSelection& selection);

// Weighted sum of the selected prompt matrices; valid_len is the full context.
enc::TokenEmbedding make_bias(const TopKSelection& selection, std::span<const double> weights,
                              const PairTable& pairs, const num::ParameterStore& store);

}  // namespace iosp::pm
