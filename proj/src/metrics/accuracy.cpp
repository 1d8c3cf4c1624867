#include "iosp/metrics/accuracy.hpp"

#include "iosp/errors.hpp"

namespace iosp::metrics {

std::optional<double> Count::fraction() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> accuracy_subset(std::span<const std::uint32_t> predictions,
                                      std::span<const std::uint32_t> truth,
                                      const std::set<std::uint32_t>& subset) {
  if (predictions.size() != truth.size()) {
    throw ContractError("accuracy_subset: predictions and truth differ in length");
  }
  Count c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (subset.count(truth[i])) c.add(predictions[i] == truth[i]);
  }
  return c.fraction();
}

Summary summarize(const AccuracyMatrix& matrix, std::size_t sessions) {
  if (sessions == 0) throw SetupError("summarize: no sessions");
  if (matrix.size() < sessions) {
    throw SetupError("summarize: accuracy matrix has " + std::to_string(matrix.size()) +
                     " rows, " + std::to_string(sessions) + " required");
  }
  Summary s;
  double all_sum = 0.0;
  double base_sum = 0.0;
  double novel_sum = 0.0;
  for (std::size_t t = 0; t < sessions; ++t) {
    all_sum += matrix[t].all;
    base_sum += matrix[t].base;
    if (t > 0) {
      if (!matrix[t].novel) {
        throw SetupError("summarize: session " + std::to_string(t + 1) + " lacks novel accuracy");
      }
      novel_sum += *matrix[t].novel;
    }
  }
  const double n = static_cast<double>(sessions);
  s.avg = all_sum / n;
  s.bma = base_sum / n;
  s.pd = matrix.front().base - matrix[sessions - 1].all;
  if (sessions > 1) s.nla = novel_sum / (n - 1.0);
  return s;
}

}  // namespace iosp::metrics
