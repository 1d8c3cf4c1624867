#include "iosp/datasets/splits.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "iosp/errors.hpp"
#include "iosp/numkernel/rng.hpp"

namespace iosp::data {

FscilSplit make_fscil_splits(std::span<const std::uint32_t> train_labels,
                             std::span<const std::uint32_t> test_labels, const SplitSpec& spec) {
  if (spec.sessions == 0) throw SetupError("splits: need at least one session");
  if (spec.base_classes == 0) throw SetupError("splits: need at least one base class");
  if (spec.sessions > 1 && (spec.ways == 0 || spec.shots == 0)) {
    throw SetupError("splits: ways and shots must be positive for incremental sessions");
  }

  std::map<std::uint32_t, std::vector<std::size_t>> train_by_class;
  for (std::size_t i = 0; i < train_labels.size(); ++i) train_by_class[train_labels[i]].push_back(i);

  std::vector<std::uint32_t> class_ids;
  for (const auto& [id, _] : train_by_class) class_ids.push_back(id);
  const std::size_t needed = spec.base_classes + (spec.sessions - 1) * spec.ways;
  if (class_ids.size() < needed) {
    throw SetupError("splits: " + std::to_string(needed) + " classes required, dataset has " +
                     std::to_string(class_ids.size()));
  }

  num::Rng rng(num::derive_seed(spec.seed, "fscil-split"));
  rng.shuffle(class_ids);

  FscilSplit split;
  std::set<std::uint32_t> seen;
  std::size_t next = 0;
  for (std::size_t t = 0; t < spec.sessions; ++t) {
    SessionSplit s;
    const std::size_t count = t == 0 ? spec.base_classes : spec.ways;
    s.classes.assign(class_ids.begin() + static_cast<std::ptrdiff_t>(next),
                     class_ids.begin() + static_cast<std::ptrdiff_t>(next + count));
    next += count;
    std::sort(s.classes.begin(), s.classes.end());

    for (std::uint32_t c : s.classes) {
      std::vector<std::size_t> pool = train_by_class.at(c);
      if (t == 0) {
        s.train.insert(s.train.end(), pool.begin(), pool.end());
        continue;
      }
      if (pool.size() < spec.shots) {
        throw SetupError("splits: class " + std::to_string(c) + " has " +
                         std::to_string(pool.size()) + " training samples, " +
                         std::to_string(spec.shots) + " shots required");
      }
      rng.shuffle(pool);
      pool.resize(spec.shots);
      s.train.insert(s.train.end(), pool.begin(), pool.end());
    }
    std::sort(s.train.begin(), s.train.end());

    seen.insert(s.classes.begin(), s.classes.end());
    for (std::size_t i = 0; i < test_labels.size(); ++i) {
      if (seen.count(test_labels[i])) s.test.push_back(i);
    }
    split.sessions.push_back(std::move(s));
  }
  return split;
}

}  // namespace iosp::data
