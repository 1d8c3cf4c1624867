#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "iosp/datasets/embedding_file.hpp"
#include "iosp/encoders/image_features.hpp"
#include "iosp/encoders/text_encoder.hpp"
#include "iosp/encoders/token_embedding.hpp"
#include "iosp/errors.hpp"

using namespace iosp;

namespace {

constexpr std::size_t L = 16;
constexpr std::size_t D = 8;

// W2 tanh(W1 m + b1) + b2 with plain loops.
std::vector<double> encode_oracle(const enc::TextEncoder& te, const num::Tensor& e) {
  const std::size_t d = te.dim();
  std::vector<double> m(d, 0.0);
  for (std::size_t r = 0; r < e.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) m[c] += e.at(r, c);
  }
  for (double& x : m) x /= static_cast<double>(e.rows());
  std::vector<double> h(d), out(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = te.b1()[i];
    for (std::size_t j = 0; j < d; ++j) s += te.w1().at(i, j) * m[j];
    h[i] = std::tanh(s);
  }
  for (std::size_t i = 0; i < d; ++i) {
    double s = te.b2()[i];
    for (std::size_t j = 0; j < d; ++j) s += te.w2().at(i, j) * h[j];
    out[i] = s;
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize_embed pads after the valid tokens") {
  const auto e = enc::tokenize_embed("a photo of a dog", 7, L, D);
  CHECK(e.valid_len == 5);
  CHECK(e.context_len() == L);
  CHECK(e.dim() == D);
  const double bound = 1.0 / std::sqrt(static_cast<double>(D));
  for (std::size_t r = 0; r < L; ++r) {
    for (std::size_t c = 0; c < D; ++c) {
      if (r >= 5) {
        CHECK(e.matrix.at(r, c) == 0.0);
      } else {
        CHECK(std::abs(e.matrix.at(r, c)) <= bound);
      }
    }
  }
}

TEST_CASE("tokenize_embed is deterministic and keyed by token") {
  const auto a = enc::tokenize_embed("a photo of a dog", 7, L, D);
  const auto b = enc::tokenize_embed("a photo of a dog", 7, L, D);
  CHECK(a.matrix == b.matrix);

  const auto cat = enc::tokenize_embed("a photo of a cat", 7, L, D);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < D; ++c) CHECK(a.matrix.at(r, c) == cat.matrix.at(r, c));
  }
  bool differs = false;
  for (std::size_t c = 0; c < D; ++c) differs |= a.matrix.at(4, c) != cat.matrix.at(4, c);
  CHECK(differs);

  // The repeated "a" maps to the same row.
  for (std::size_t c = 0; c < D; ++c) CHECK(a.matrix.at(0, c) == a.matrix.at(3, c));

  const auto upper = enc::tokenize_embed("  A PHOTO of a   Dog ", 7, L, D);
  CHECK(upper.matrix == a.matrix);

  const auto other_seed = enc::tokenize_embed("a photo of a dog", 8, L, D);
  CHECK_FALSE(other_seed.matrix == a.matrix);
}

TEST_CASE("tokenize_embed errors and valid_len bookkeeping") {
  CHECK_THROWS_AS(enc::tokenize_embed("   ", 1, L, D), SetupError);
  CHECK_THROWS_AS(enc::tokenize_embed("one two three four five", 1, 4, D), CapacityError);
  CHECK(enc::tokenize_embed("one two three four", 1, 4, D).valid_len == 4);
  std::string text;
  for (std::size_t n = 1; n <= L; ++n) {
    text += (n == 1 ? "" : " ") + std::string("w") + std::to_string(n);
    CHECK(enc::tokenize_embed(text, 3, L, D).valid_len == n);
  }
  CHECK(enc::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(enc::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("text encoder construction") {
  const enc::TextEncoder a(D, L, 5), b(D, L, 5), c(D, L, 6);
  CHECK(a.w1() == b.w1());
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
  const double bound = 1.0 / std::sqrt(static_cast<double>(D));
  for (const auto* t : {&a.w1(), &a.b1(), &a.w2(), &a.b2()}) {
    for (double x : t->values()) CHECK(std::abs(x) <= bound);
  }
  CHECK_THROWS_AS(a.encode(num::Tensor::matrix(L - 1, D)), ContractError);
  CHECK_THROWS_AS(a.encode(num::Tensor::matrix(L, D + 1)), ContractError);
}

TEST_CASE("text encoder output") {
  const enc::TextEncoder te(D, L, 9);
  const auto zero = te.encode(num::Tensor::matrix(L, D));
  for (std::size_t i = 0; i < D; ++i) {
    double s = te.b2()[i];
    for (std::size_t j = 0; j < D; ++j) s += te.w2().at(i, j) * std::tanh(te.b1()[j]);
    CHECK(zero[i] == doctest::Approx(s).epsilon(1e-14));
  }

  num::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const num::Tensor e = testutil::random_tensor({L, D}, rng);
    const auto got = te.encode(e);
    const auto want = encode_oracle(te, e);
    for (std::size_t i = 0; i < D; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("text encoding depends only on the row mean") {
  const enc::TextEncoder te(D, L, 2);
  num::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const num::Tensor e = testutil::random_tensor({L, D}, rng);
    num::Tensor z = testutil::random_tensor({L, D}, rng);
    for (std::size_t c = 0; c < D; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < L; ++r) mean += z.at(r, c);
      mean /= L;
      for (std::size_t r = 0; r < L; ++r) z.at(r, c) -= mean;
    }
    num::Tensor shifted = e;
    for (std::size_t i = 0; i < e.size(); ++i) shifted[i] += z[i];
    const auto a = te.encode(e);
    const auto b = te.encode(shifted);
    for (std::size_t i = 0; i < D; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("text encoder gradient matches finite differences") {
  const enc::TextEncoder te(4, 3, 1);
  num::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    num::ParameterStore store;
    const auto e = store.add("E", testutil::random_tensor({3, 4}, rng));
    const num::Tensor probe = testutil::random_tensor({4}, rng);
    const auto build = [&](num::Tape& tape, const num::ParameterStore& s) {
      const auto w = te.bind(tape);
      return num::sum(num::mul(te.encode(w, tape.bind(s, e)), tape.constant(probe)));
    };
    const auto result = num::eval_with_gradients([&](num::Tape& t) { return build(t, store); }, store, {e});
    const auto fd = num::finite_diff_grad(
        [&](const num::ParameterStore& s) {
          num::Tape t;
          return build(t, s).value().item();
        },
        store, {e});
    CHECK(testutil::grads_agree(result.grads.at(e), fd.at(e)));
  }
}

TEST_CASE("image feature source round trip and read observer") {
  testutil::TempDir dir("features");
  data::EmbeddingSet set;
  set.dim = 4;
  set.classes = {{0, "cat"}, {1, "dog"}};
  set.records = {{0, {0.5f, -1.0f, 2.0f, 0.125f}}, {1, {1e-3f, 3.0f, -2.5f, 0.0f}}, {1, {1, 2, 3, 4}}};
  data::write_embeddings(set, dir.path() / "emb");
  auto src = enc::load_image_features(dir.path() / "emb");
  CHECK(src.size() == 3);
  CHECK(src.dim() == 4);
  CHECK(src.labels() == std::vector<std::uint32_t>{0, 1, 1});
  for (std::size_t i = 0; i < 3; ++i) {
    const auto f = src.feature(i);
    for (std::size_t j = 0; j < 4; ++j) CHECK(f[j] == static_cast<double>(set.records[i].feature[j]));
  }

  std::vector<std::size_t> reads;
  src.set_observer([&](std::size_t id) { reads.push_back(id); });
  (void)src.feature(2);
  (void)src.feature(0);
  CHECK(reads == std::vector<std::size_t>{2, 0});
  CHECK_THROWS_AS((void)src.feature(3), std::out_of_range);
}
