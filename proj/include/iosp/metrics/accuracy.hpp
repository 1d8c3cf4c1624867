#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace iosp::metrics {

// Integer-exact correct/total counter.
struct Count {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  void add(bool hit) {
    ++total;
    if (hit) ++correct;
  }
  Count& operator+=(const Count& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
  // Absent when nothing was evaluated.
  std::optional<double> fraction() const;
  friend bool operator==(const Count&, const Count&) = default;
};

// Accuracy over the samples whose truth lies in `subset`; predictions are
// class ids already argmaxed over every seen class.
std::optional<double> accuracy_subset(std::span<const std::uint32_t> predictions,
                                      std::span<const std::uint32_t> truth,
                                      const std::set<std::uint32_t>& subset);

// One row of the accuracy matrix for session t (0-based in code).
struct AccuracyEntry {
  double all = 0.0;                // classes of sessions 1..t
  double base = 0.0;               // base-session classes
  std::optional<double> novel;     // classes of sessions 2..t, absent for the base session
};

using AccuracyMatrix = std::vector<AccuracyEntry>;

struct Summary {
  double avg = 0.0;
  double pd = 0.0;
  double bma = 0.0;
  std::optional<double> nla;  // needs at least two sessions
};

// Throws SetupError when the matrix has fewer than `sessions` rows or a
// session after the first lacks its novel-class accuracy.
Summary summarize(const AccuracyMatrix& matrix, std::size_t sessions);

}  // namespace iosp::metrics
