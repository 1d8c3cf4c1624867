#include "iosp/numkernel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iosp/errors.hpp"

namespace iosp::num {

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("softmax of an empty vector");
  const double peak = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine_sim: dimension mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine_sim: zero-norm input");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cross_entropy(std::span<const double> probs, std::size_t target, WarningLog* warnings) {
  if (target >= probs.size()) {
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) +
                            " out of range for " + std::to_string(probs.size()) + " classes");
  }
  double p = probs[target];
  if (p < kProbFloor) {
    if (warnings) warnings->add("cross_entropy: probability " + std::to_string(p) + " clamped");
    p = kProbFloor;
  }
  return -std::log(p);
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace iosp::num
