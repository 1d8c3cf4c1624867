#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iosp::data {

struct SessionSplit {
  std::vector<std::uint32_t> classes;  // ascending
  std::vector<std::size_t> train;      // sample ids into the training source
  std::vector<std::size_t> test;       // sample ids into the test source, classes 1..t
};

struct FscilSplit {
  std::vector<SessionSplit> sessions;
  std::size_t session_count() const noexcept { return sessions.size(); }
};

struct SplitSpec {
  std::size_t base_classes = 60;
  std::size_t ways = 5;
  std::size_t shots = 5;
  std::size_t sessions = 9;
  std::uint64_t seed = 0;
};

// Seeded class partition: base session gets every training sample of its
// classes; each later session gets `shots` seeded samples per class. Test sets
// keep every test sample of the classes seen so far. Throws SetupError when
// there are too few classes or samples.
FscilSplit make_fscil_splits(std::span<const std::uint32_t> train_labels,
                             std::span<const std::uint32_t> test_labels, const SplitSpec& spec);

}  // namespace iosp::data
