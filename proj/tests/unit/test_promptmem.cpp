#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "oracle.hpp"
#include "iosp/encoders/token_embedding.hpp"
#include "iosp/errors.hpp"
#include "iosp/promptmem/class_bank.hpp"
#include "iosp/promptmem/key_prompt.hpp"
#include "iosp/promptmem/keymap.hpp"
#include "iosp/promptmem/retrieval.hpp"

using namespace iosp;
using namespace iosp::pm;

namespace {

constexpr std::size_t L = 6;
constexpr std::size_t D = 4;

std::vector<ClassSpec> specs(std::initializer_list<const char*> names, std::uint32_t first_id) {
  std::vector<ClassSpec> out;
  for (const char* n : names) out.push_back({first_id++, n});
  return out;
}

}  // namespace

TEST_CASE("class embeddings come from the prompt template") {
  num::ParameterStore store;
  ClassTokenBank bank;
  const auto base = specs({"dog", "cat", "owl"}, 0);
  init_class_embeddings(base, 3, L, D, bank, store);
  CHECK(bank.session(0)[0].valid_len == 5);
  CHECK(store.value(bank.session(0)[0].embedding) ==
        enc::tokenize_embed("a photo of a dog", 3, L, D).matrix);

  init_class_embeddings(specs({"red fox", "eel"}, 10), 3, L, D, bank, store);
  CHECK(bank.session_sizes() == std::vector<std::size_t>{3, 2});
  CHECK(bank.session(1)[0].valid_len == 6);
  CHECK(bank.class_count(1) == 5);
  CHECK(bank.class_count(0) == 3);
  CHECK(bank.flat_index(10, 1) == std::optional<std::size_t>(3));
  CHECK_FALSE(bank.flat_index(10, 0).has_value());
  CHECK(bank.owner(11) == std::optional<std::size_t>(1));
  CHECK(bank.flattened(1)[4]->name == "eel");
  CHECK(store.name(bank.session(1)[1].embedding) == class_embedding_name(1, 1));

  CHECK_THROWS_AS(init_class_embeddings(specs({"cat"}, 20), 3, L, D, bank, store), SetupError);
  CHECK_THROWS_AS(init_class_embeddings(specs({"bat"}, 0), 3, L, D, bank, store), SetupError);
  CHECK_THROWS_AS(init_class_embeddings(specs({"bat", "bat"}, 30), 3, L, D, bank, store), SetupError);
  CHECK(bank.session_count() == 2);
}

TEST_CASE("class embeddings from a token file are used verbatim") {
  data::TokenFile tf;
  tf.context_len = 2;
  tf.dim = 2;
  tf.classes = {{4, 2, {0.5f, 1.5f, -1.0f, 2.0f}}};
  num::ParameterStore store;
  ClassTokenBank bank;
  init_class_embeddings(specs({"dog"}, 4), 0, 2, 2, bank, store, &tf);
  CHECK(store.value(bank.session(0)[0].embedding) == num::Tensor({2, 2}, {0.5, 1.5, -1.0, 2.0}));
  CHECK(bank.session(0)[0].valid_len == 2);
  CHECK_THROWS_AS(init_class_embeddings(specs({"cat"}, 5), 0, 2, 2, bank, store, &tf), SetupError);
}

TEST_CASE("key-prompt pairs from class embeddings") {
  const enc::TextEncoder encoder(D, L, 1);
  num::ParameterStore store;
  ClassTokenBank bank;
  PairTable pairs;
  init_class_embeddings(specs({"solo"}, 0), 2, L, D, bank, store);
  init_key_prompt_pairs(1, bank, encoder, 9, PairInitMode::class_embedding, pairs, store);
  const auto& e = store.value(bank.session(0)[0].embedding);
  CHECK(store.value(pairs[0][0].key) == encoder.encode(e));
  CHECK(store.value(pairs[0][0].prompt) == e);
  CHECK(pairs[0][0].prompt != bank.session(0)[0].embedding);

  init_class_embeddings(specs({"a1", "a2", "a3", "a4", "a5"}, 1), 2, L, D, bank, store);
  init_key_prompt_pairs(3, bank, encoder, 9, PairInitMode::class_embedding, pairs, store);
  std::set<std::ptrdiff_t> picked;
  for (const auto& p : pairs[1]) picked.insert(p.source_class);
  CHECK(picked.size() == 3);
  CHECK(store.name(pairs[1][2].key) == key_name(1, 2));
  CHECK(pairs[1][2].owner_session == 1);
  CHECK(pairs[1][2].index_in_session == 2);
}

TEST_CASE("pair class choice covers every class before repeating") {
  const auto picks = choose_pair_classes(100, 60, 4);
  std::map<std::size_t, int> uses;
  for (std::size_t p : picks) ++uses[p];
  CHECK(uses.size() == 60);
  int repeats = 0;
  for (const auto& [c, n] : uses) repeats += n - 1;
  CHECK(repeats == 40);
  std::set<std::size_t> first(picks.begin(), picks.begin() + 60);
  CHECK(first.size() == 60);
  CHECK(choose_pair_classes(100, 60, 4) == picks);
  CHECK_THROWS_AS(choose_pair_classes(3, 0, 4), SetupError);
}

TEST_CASE("random key-prompt initialization") {
  const enc::TextEncoder encoder(D, L, 1);
  num::ParameterStore store;
  ClassTokenBank bank;
  PairTable pairs;
  init_class_embeddings(specs({"x", "y"}, 0), 2, L, D, bank, store);
  init_key_prompt_pairs(4, bank, encoder, 5, PairInitMode::random, pairs, store);
  const double bound = 1.0 / std::sqrt(static_cast<double>(D));
  for (const auto& p : pairs[0]) {
    CHECK(p.source_class == -1);
    CHECK(store.value(p.prompt).shape() == std::vector<std::size_t>{L, D});
    for (double x : store.value(p.key).values()) CHECK(std::abs(x) <= bound);
    for (double x : store.value(p.prompt).values()) CHECK(std::abs(x) <= bound);
  }
  PairTable empty;
  ClassTokenBank none;
  CHECK_THROWS_AS(init_key_prompt_pairs(1, none, encoder, 5, PairInitMode::random, empty, store),
                  SetupError);
}

TEST_CASE("key-map variants") {
  num::Rng rng(3);
  const std::vector<double> f{0.5, -1.0, 2.0, 0.25};

  num::ParameterStore s1;
  KeyMap fc1 = KeyMap::create(KeyMapVariant::fc1, D, s1, rng);
  CHECK(fc1.params().size() == 2);
  num::Tensor eye = num::Tensor::matrix(D, D);
  for (std::size_t i = 0; i < D; ++i) eye.at(i, i) = 1.0;
  s1.value(fc1.params()[0]) = eye;
  s1.value(fc1.params()[1]) = num::Tensor({D}, 0.0);
  CHECK(fc1.apply(s1, f) == num::Tensor::vector(f));

  num::ParameterStore s2;
  KeyMap fc2 = KeyMap::create(KeyMapVariant::fc2, D, s2, rng);
  CHECK(fc2.params().size() == 4);
  s2.value(fc2.params()[2]) = num::Tensor::matrix(D, D);
  CHECK(fc2.apply(s2, f) == s2.value(fc2.params()[3]));

  num::ParameterStore s3;
  KeyMap res2 = KeyMap::create(KeyMapVariant::res2, D, s3, rng);
  s3.value(res2.params()[0]) = num::Tensor::matrix(D, D);
  s3.value(res2.params()[2]) = num::Tensor::matrix(D, D);
  const auto out = res2.apply(s3, f);
  for (std::size_t i = 0; i < D; ++i) CHECK(out[i] == f[i] + s3.value(res2.params()[3])[i]);

  CHECK_THROWS_AS(fc1.apply(s1, std::vector<double>{1.0, 2.0}), ContractError);
  CHECK(keymap_variant_from_string("RES2") == KeyMapVariant::res2);
  CHECK(keymap_variant_from_string("fc2") == KeyMapVariant::fc2);
  CHECK_THROWS_AS(keymap_variant_from_string("fc3"), std::invalid_argument);
  CHECK(KeyMap::attach(KeyMapVariant::fc2, s2).params() == fc2.params());
  CHECK_THROWS_AS(KeyMap::attach(KeyMapVariant::fc2, s1), FormatError);
}

TEST_CASE("key-map gradients match finite differences") {
  num::Rng rng(17);
  for (auto variant : {KeyMapVariant::fc1, KeyMapVariant::fc2, KeyMapVariant::res2}) {
    num::ParameterStore store;
    KeyMap km = KeyMap::create(variant, D, store, rng);
    const auto x = testutil::random_tensor({D}, rng);
    const auto probe = testutil::random_tensor({D}, rng);
    const std::set<num::ParamId> learn(km.params().begin(), km.params().end());
    const auto build = [&](num::Tape& t, const num::ParameterStore& s) {
      return num::sum(num::mul(km.apply(t, s, t.constant(x)), t.constant(probe)));
    };
    const auto r = num::eval_with_gradients([&](num::Tape& t) { return build(t, store); }, store, learn);
    const auto fd = num::finite_diff_grad(
        [&](const num::ParameterStore& s) {
          num::Tape t;
          return build(t, s).value().item();
        },
        store, learn);
    for (auto id : learn) CHECK(testutil::grads_agree(r.grads.at(id), fd.at(id)));
  }
}

TEST_CASE("topk_2d examples") {
  const auto sel = topk_2d({{0.9, 0.1}, {0.5, 0.7}}, 2);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0] == TopKEntry{0, 0, 0.9});
  CHECK(sel[1] == TopKEntry{1, 1, 0.7});

  const auto tied = topk_2d({{0.3, 0.3}, {0.3, 0.3}}, 2);
  CHECK(tied[0].session == 0);
  CHECK(tied[0].index == 0);
  CHECK(tied[1].session == 0);
  CHECK(tied[1].index == 1);

  CHECK(quotient_remainder(4, 3) == std::pair<std::size_t, std::size_t>{2, 1});
  CHECK(quotient_remainder(5, 3) == std::pair<std::size_t, std::size_t>{2, 2});
  CHECK(quotient_remainder(3, 3) == std::pair<std::size_t, std::size_t>{1, 3});

  CHECK_THROWS_AS(topk_2d({{0.1}, {0.2}}, 3), SetupError);
  CHECK_THROWS_AS(topk_2d({{0.1, std::nan("")}}, 1), std::invalid_argument);
}

TEST_CASE("topk_2d matches brute force on ragged pools") {
  num::Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    SimilarityTable sims(1 + rng.below(5));
    std::size_t total = 0;
    const bool ties = trial % 2 == 1;
    for (auto& s : sims) {
      s.resize(rng.below(6));
      for (double& x : s) x = ties ? static_cast<double>(rng.below(4)) / 4.0 : rng.uniform(-1.0, 1.0);
      total += s.size();
    }
    if (total == 0) {
      sims[0].push_back(0.0);
      total = 1;
    }
    const std::size_t k = 1 + rng.below(total);
    CHECK(topk_2d(sims, k) == oracle::topk_sorted(sims, k));
  }
}

TEST_CASE("session-major flattening equals the quotient/remainder mapping on rectangles") {
  num::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(5);
    SimilarityTable sims(n, std::vector<double>(m));
    for (auto& row : sims) {
      for (double& x : row) x = rng.uniform(-1.0, 1.0);
    }
    const auto sel = topk_2d(sims, n * m);
    for (const auto& e : sel) {
      const std::size_t z = e.session * m + e.index + 1;
      const auto [q, r] = quotient_remainder(z, m);
      CHECK(q == e.session + 1);
      CHECK(r == e.index + 1);
    }
  }
}

TEST_CASE("prompt weights and bias") {
  CHECK(prompt_weights({{0, 0, 0.4}}) == std::vector<double>{1.0});
  const auto eq = prompt_weights({{0, 0, 0.2}, {0, 1, 0.2}});
  CHECK(eq[0] == 0.5);
  CHECK(eq[1] == 0.5);
  const auto w = prompt_weights({{0, 0, 0.9}, {0, 1, 0.7}});
  CHECK(std::abs(w[0] - 0.549834) < 1e-6);
  CHECK(std::abs(w[1] - 0.450166) < 1e-6);

  num::Rng rng(6);
  num::ParameterStore store;
  PairTable pairs(1);
  const num::Tensor p = testutil::random_tensor({L, D}, rng);
  num::Tensor neg_m = p;
  for (double& x : neg_m.values()) x = -x;
  const num::Tensor& neg = neg_m;
  for (const auto* t : {&p, &p, &neg}) {
    KeyPromptPair kp;
    kp.key = store.add("k" + std::to_string(pairs[0].size()), testutil::random_tensor({D}, rng));
    kp.prompt = store.add("p" + std::to_string(pairs[0].size()), *t);
    kp.index_in_session = pairs[0].size();
    pairs[0].push_back(kp);
  }
  const TopKSelection one{{0, 1, 0.3}};
  const auto single = make_bias(one, std::vector<double>{1.0}, pairs, store);
  CHECK(single.matrix == p);
  CHECK(single.valid_len == L);

  const TopKSelection same{{0, 0, 0.3}, {0, 1, 0.1}};
  const auto b_same = make_bias(same, std::vector<double>{0.3, 0.7}, pairs, store);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(b_same.matrix[i] - p[i]) < 1e-15);

  const TopKSelection opposite{{0, 0, 0.3}, {0, 2, 0.3}};
  const auto zero = make_bias(opposite, std::vector<double>{0.5, 0.5}, pairs, store);
  for (double x : zero.matrix.values()) CHECK(x == 0.0);

  CHECK_THROWS_AS(make_bias(opposite, std::vector<double>{1.0}, pairs, store), ContractError);
}

TEST_CASE("retrieval is invariant to key scale and storage order") {
  num::Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    num::ParameterStore store;
    PairTable pairs(2);
    std::vector<num::Tensor> keys, prompts;
    for (std::size_t s = 0; s < 2; ++s) {
      for (std::size_t i = 0; i < 3 + s; ++i) {
        KeyPromptPair kp;
        kp.key = store.add("k" + std::to_string(s) + std::to_string(i), testutil::random_tensor({D}, rng));
        kp.prompt = store.add("p" + std::to_string(s) + std::to_string(i), testutil::random_tensor({L, D}, rng));
        kp.owner_session = s;
        kp.index_in_session = i;
        pairs[s].push_back(kp);
      }
    }
    const auto kx = testutil::random_vector(D, rng);
    const auto bias = [&](const std::vector<double>& key, const PairTable& table) {
      const auto sel = topk_2d(key_similarities(key, table, store, 1), 3);
      const auto w = prompt_weights(sel);
      double total = 0.0;
      for (double x : w) total += x;
      CHECK(std::abs(total - 1.0) < 1e-9);
      return make_bias(sel, w, table, store).matrix;
    };
    const num::Tensor base = bias(kx, pairs);

    auto scaled = kx;
    const double alpha = 0.01 + 20.0 * rng.uniform01();
    for (double& x : scaled) x *= alpha;
    const num::Tensor b_scaled = bias(scaled, pairs);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(base[i] - b_scaled[i]) < 1e-12);

    PairTable shuffled = pairs;
    for (auto& row : shuffled) rng.shuffle(row);
    const num::Tensor b_perm = bias(kx, shuffled);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(base[i] - b_perm[i]) < 1e-12);
  }
}
