#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace iosp::data {

// IOSF-EMB: a directory holding manifest.json and features.bin.
//   features.bin = "IOSF" | u32 version=1 | u32 dim | u64 count |
//                  count x (u32 class_id, dim x f32), little-endian.
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kFeaturesName = "features.bin";

struct ClassInfo {
  std::uint32_t id = 0;
  std::string name;
  friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

struct EmbeddingRecord {
  std::uint32_t class_id = 0;
  std::vector<float> feature;
  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddingSet {
  std::uint32_t dim = 0;
  std::vector<ClassInfo> classes;
  std::vector<EmbeddingRecord> records;
  std::string notes;

  const ClassInfo* find_class(std::uint32_t id) const;
  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& dir);
EmbeddingSet read_embeddings(const std::filesystem::path& dir);

// IOSF-TOK: "IOST" | u32 version=1 | u32 context_len | u32 dim | u64 class_count |
//           per class (u32 class_id, u32 valid_len, context_len x dim f32).
inline constexpr std::uint32_t kTokenVersion = 1;

struct TokenRecord {
  std::uint32_t class_id = 0;
  std::uint32_t valid_len = 0;
  std::vector<float> rows;  // context_len * dim, row-major
  friend bool operator==(const TokenRecord&, const TokenRecord&) = default;
};

struct TokenFile {
  std::uint32_t context_len = 0;
  std::uint32_t dim = 0;
  std::vector<TokenRecord> classes;

  const TokenRecord* find(std::uint32_t class_id) const;
  friend bool operator==(const TokenFile&, const TokenFile&) = default;
};

void write_token_embeddings(const TokenFile& file, const std::filesystem::path& path);
TokenFile read_token_embeddings(const std::filesystem::path& path);

}  // namespace iosp::data
