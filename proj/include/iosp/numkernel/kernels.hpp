#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace iosp::num {

// Probabilities below this are clamped before taking the log.
inline constexpr double kProbFloor = 1e-12;

struct WarningLog {
  std::vector<std::string> messages;
  void add(std::string message) { messages.push_back(std::move(message)); }
};

// Max-shifted softmax. Throws std::invalid_argument on empty input.
std::vector<double> softmax(std::span<const double> v);

// Throws std::domain_error if either input has zero norm.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// -log(probs[target]); clamps a zero probability to kProbFloor and records a
// warning in `warnings` when given. Throws std::out_of_range for a bad index.
double cross_entropy(std::span<const double> probs, std::size_t target,
                     WarningLog* warnings = nullptr);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Smallest index among the maxima.
std::size_t argmax(std::span<const double> v);

}  // namespace iosp::num
