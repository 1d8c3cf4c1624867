#include "iosp/encoders/image_features.hpp"

#include <cmath>
#include <stdexcept>

#include "iosp/errors.hpp"

namespace iosp::enc {

ImageFeatureSource::ImageFeatureSource(const data::EmbeddingSet& set)
    : dim_(set.dim), classes_(set.classes) {
  labels_.reserve(set.records.size());
  features_.reserve(set.records.size() * dim_);
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const auto& rec = set.records[i];
    if (rec.feature.size() != dim_) {
      throw FormatError("sample " + std::to_string(i) + " has dimension " +
                        std::to_string(rec.feature.size()) + ", expected " + std::to_string(dim_));
    }
    labels_.push_back(rec.class_id);
    for (float x : rec.feature) {
      if (!std::isfinite(x)) throw FormatError("sample " + std::to_string(i) + " is not finite");
      features_.push_back(static_cast<double>(x));
    }
  }
}

std::span<const double> ImageFeatureSource::feature(std::size_t id) const {
  if (id >= labels_.size()) throw std::out_of_range("image feature id out of range");
  if (observer_) observer_(id);
  return std::span<const double>(features_).subspan(id * dim_, dim_);
}

ImageFeatureSource load_image_features(const std::filesystem::path& dir) {
  return ImageFeatureSource(data::read_embeddings(dir));
}

}  // namespace iosp::enc
