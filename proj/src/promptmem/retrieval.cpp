#include "iosp/promptmem/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iosp/errors.hpp"
#include "iosp/numkernel/kernels.hpp"

namespace iosp::pm {

TopKSelection topk_2d(const SimilarityTable& sims, std::size_t k) {
  struct Flat {
    double sim;
    std::size_t pos, session, index;
  };
  std::vector<Flat> flat;
  for (std::size_t s = 0; s < sims.size(); ++s) {
    for (std::size_t i = 0; i < sims[s].size(); ++i) {
      if (!std::isfinite(sims[s][i])) throw std::invalid_argument("topk_2d: non-finite similarity");
      flat.push_back({sims[s][i], flat.size(), s, i});
    }
  }
  if (k == 0) throw SetupError("topk_2d: K must be at least 1");
  if (flat.size() < k) {
    throw SetupError("topk_2d: pool of " + std::to_string(flat.size()) +
                     " key-prompt pairs is smaller than K=" + std::to_string(k));
  }
  const auto before = [](const Flat& a, const Flat& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.pos < b.pos;
  };
  std::partial_sort(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(k), flat.end(), before);
  TopKSelection out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) out.push_back({flat[j].session, flat[j].index, flat[j].sim});
  return out;
}

std::pair<std::size_t, std::size_t> quotient_remainder(std::size_t z, std::size_t m) {
  if (z == 0 || m == 0) throw std::invalid_argument("quotient_remainder: z and m are 1-based");
  const std::size_t q = (z - 1) / m + 1;
  return {q, z - (q - 1) * m};
}

SimilarityTable key_similarities(std::span<const double> image_key, const PairTable& pairs,
                                 const num::ParameterStore& store, std::size_t through) {
  SimilarityTable sims;
  for (std::size_t s = 0; s <= through && s < pairs.size(); ++s) {
    std::vector<double> row;
    row.reserve(pairs[s].size());
    for (const auto& p : pairs[s]) row.push_back(num::cosine_sim(image_key, store.value(p.key).values()));
    sims.push_back(std::move(row));
  }
  return sims;
}

std::vector<double> prompt_weights(const TopKSelection& selection) {
  std::vector<double> sims;
  sims.reserve(selection.size());
  for (const auto& e : selection) sims.push_back(e.similarity);
  return num::softmax(sims);
}

enc::TokenEmbedding make_bias(const TopKSelection& selection, std::span<const double> weights,
                              const PairTable& pairs, const num::ParameterStore& store) {
  if (selection.size() != weights.size() || selection.empty()) {
    throw ContractError("make_bias: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(selection.size()) + " selected pairs");
  }
  num::Tensor bias;
  for (std::size_t j = 0; j < selection.size(); ++j) {
    const num::Tensor& prompt =
        store.value(pairs.at(selection[j].session).at(selection[j].index).prompt);
    if (bias.empty()) bias = num::Tensor(prompt.shape(), 0.0);
    num::require_same_shape(bias, prompt, "make_bias");
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += weights[j] * prompt[i];
  }
  const std::size_t rows = bias.rows();
  return {std::move(bias), rows};
}

}  // namespace iosp::pm
