#pragma once

#include <cstdint>
#include <filesystem>

#include "iosp/datasets/embedding_file.hpp"

namespace iosp::data {

struct SyntheticSpec {
  std::uint32_t classes = 10;
  std::uint32_t train_per_class = 50;
  std::uint32_t test_per_class = 20;
  std::uint32_t dim = 32;
  double sigma = 0.1;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  EmbeddingSet train;
  EmbeddingSet test;
};

// Each class has a random unit prototype; a sample is
// normalize(prototype + sigma * N(0, I)). Class names are "class_000", ...
// Throws std::invalid_argument for sigma < 0 or empty sizes.
SyntheticDataset gen_synthetic(const SyntheticSpec& spec);

// Writes <dir>/train and <dir>/test as IOSF-EMB directories.
void write_synthetic(const SyntheticDataset& dataset, const std::filesystem::path& dir);

}  // namespace iosp::data
