#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "iosp/datasets/embedding_file.hpp"

namespace iosp::enc {

// Precomputed image features, widened to double on load. Reads can be
// observed so tests can audit which samples a training loop touched.
class ImageFeatureSource {
 public:
  using ReadObserver = std::function<void(std::size_t sample_id)>;

  ImageFeatureSource() = default;
  explicit ImageFeatureSource(const data::EmbeddingSet& set);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::uint32_t label(std::size_t id) const { return labels_.at(id); }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  const std::vector<data::ClassInfo>& classes() const noexcept { return classes_; }

  std::span<const double> feature(std::size_t id) const;

  void set_observer(ReadObserver observer) { observer_ = std::move(observer); }

 private:
  std::size_t dim_ = 0;
  std::vector<data::ClassInfo> classes_;
  std::vector<std::uint32_t> labels_;
  std::vector<double> features_;
  ReadObserver observer_;
};

ImageFeatureSource load_image_features(const std::filesystem::path& dir);

}  // namespace iosp::enc
