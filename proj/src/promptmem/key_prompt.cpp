#include "iosp/promptmem/key_prompt.hpp"

#include <cmath>
#include <numeric>

#include "iosp/errors.hpp"
#include "iosp/numkernel/rng.hpp"

namespace iosp::pm {

std::string key_name(std::size_t session, std::size_t index) {
  return "key/s" + std::to_string(session) + "/p" + std::to_string(index);
}

std::string prompt_name(std::size_t session, std::size_t index) {
  return "prompt/s" + std::to_string(session) + "/p" + std::to_string(index);
}

std::vector<std::size_t> choose_pair_classes(std::size_t count, std::size_t classes,
                                             std::uint64_t seed) {
  if (classes == 0) throw SetupError("key-prompt init: session has no classes");
  num::Rng rng(seed);
  std::vector<std::size_t> perm(classes);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(i < classes ? perm[i] : rng.below(classes));
  }
  return out;
}

void init_key_prompt_pairs(std::size_t count, const ClassTokenBank& bank,
                           const enc::TextEncoder& encoder, std::uint64_t seed, PairInitMode mode,
                           PairTable& pairs, num::ParameterStore& store) {
  if (count == 0) throw SetupError("key-prompt init: N_t must be at least 1");
  if (bank.session_count() == 0) throw SetupError("key-prompt init: empty class bank");
  const std::size_t session = bank.session_count() - 1;
  if (pairs.size() != session) {
    throw ContractError("key-prompt init: pairs table out of step with class bank");
  }
  const auto& classes = bank.session(session);
  if (classes.empty()) throw SetupError("key-prompt init: empty class bank");

  std::vector<KeyPromptPair> created;
  created.reserve(count);
  if (mode == PairInitMode::class_embedding) {
    const auto picks = choose_pair_classes(count, classes.size(), seed);
    for (std::size_t i = 0; i < count; ++i) {
      const num::Tensor& e = store.value(classes[picks[i]].embedding);
      num::Tensor key = encoder.encode(e);
      num::Tensor prompt = e;
      KeyPromptPair p;
      p.key = store.add(key_name(session, i), std::move(key));
      p.prompt = store.add(prompt_name(session, i), std::move(prompt));
      p.owner_session = session;
      p.index_in_session = i;
      p.source_class = static_cast<std::ptrdiff_t>(picks[i]);
      created.push_back(p);
    }
  } else {
    num::Rng rng(seed);
    const std::size_t dim = encoder.dim();
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < count; ++i) {
      num::Tensor key({dim}, 0.0);
      for (double& x : key.values()) x = rng.uniform(-bound, bound);
      num::Tensor prompt = num::Tensor::matrix(encoder.context_len(), dim);
      for (double& x : prompt.values()) x = rng.uniform(-bound, bound);
      KeyPromptPair p;
      p.key = store.add(key_name(session, i), std::move(key));
      p.prompt = store.add(prompt_name(session, i), std::move(prompt));
      p.owner_session = session;
      p.index_in_session = i;
      created.push_back(p);
    }
  }
  pairs.push_back(std::move(created));
}

}  // namespace iosp::pm
