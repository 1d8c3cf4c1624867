#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace iosp::num {

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream seed for a named purpose ("encoder", "split", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

// Seeded generator with distributions implemented in-house so that draws are
// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  std::size_t below(std::size_t n);  // uniform in [0, n)

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace iosp::num
