#include "iosp/datasets/embedding_file.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "iosp/datasets/binary_io.hpp"
#include "iosp/errors.hpp"

namespace iosp::data {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const ClassInfo* EmbeddingSet::find_class(std::uint32_t id) const {
  for (const auto& c : classes) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const TokenRecord* TokenFile::find(std::uint32_t class_id) const {
  for (const auto& r : classes) {
    if (r.class_id == class_id) return &r;
  }
  return nullptr;
}

void write_embeddings(const EmbeddingSet& set, const fs::path& dir) {
  std::set<std::uint32_t> ids;
  for (const auto& c : set.classes) {
    if (!ids.insert(c.id).second) throw ContractError("write_embeddings: duplicate class id");
  }
  ByteWriter w;
  w.bytes("IOSF");
  w.u32(kEmbeddingVersion);
  w.u32(set.dim);
  w.u64(set.records.size());
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const auto& r = set.records[i];
    if (r.feature.size() != set.dim) {
      throw ContractError("write_embeddings: record " + std::to_string(i) + " has dimension " +
                          std::to_string(r.feature.size()));
    }
    if (!ids.count(r.class_id)) {
      throw ContractError("write_embeddings: record " + std::to_string(i) + " has unknown class id");
    }
    w.u32(r.class_id);
    for (float x : r.feature) w.f32(x);
  }

  ordered_json manifest;
  manifest["version"] = kEmbeddingVersion;
  manifest["dim"] = set.dim;
  manifest["count"] = set.records.size();
  manifest["classes"] = ordered_json::array();
  for (const auto& c : set.classes) manifest["classes"].push_back({{"id", c.id}, {"name", c.name}});
  manifest["notes"] = set.notes;

  fs::create_directories(dir);
  write_file(dir / kFeaturesName, w.buffer());
  write_text_file(dir / kManifestName, manifest.dump(2) + "\n");
}

namespace {

ordered_json parse_manifest(const fs::path& path) {
  ordered_json m;
  try {
    m = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  for (const char* key : {"version", "dim", "count", "classes"}) {
    if (!m.contains(key)) throw FormatError(path.string() + ": manifest lacks '" + key + "'");
  }
  return m;
}

}  // namespace

EmbeddingSet read_embeddings(const fs::path& dir) {
  const auto manifest_path = dir / kManifestName;
  const auto features_path = dir / kFeaturesName;
  const ordered_json m = parse_manifest(manifest_path);

  EmbeddingSet set;
  std::uint64_t manifest_count = 0;
  try {
    if (m.at("version").get<std::uint32_t>() != kEmbeddingVersion) {
      throw FormatError(manifest_path.string() + ": unsupported manifest version");
    }
    set.dim = m.at("dim").get<std::uint32_t>();
    manifest_count = m.at("count").get<std::uint64_t>();
    for (const auto& c : m.at("classes")) {
      set.classes.push_back({c.at("id").get<std::uint32_t>(), c.at("name").get<std::string>()});
    }
    if (m.contains("notes")) set.notes = m.at("notes").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": malformed manifest: " + e.what());
  }

  const auto bytes = read_file(features_path);
  ByteReader r(bytes, features_path.string());
  r.expect_magic("IOSF");
  const std::size_t version_at = r.offset();
  if (r.u32() != kEmbeddingVersion) {
    throw FormatError(features_path.string() + ": unsupported version at byte offset " +
                      std::to_string(version_at));
  }
  const std::uint32_t dim = r.u32();
  if (dim != set.dim) r.fail("dim " + std::to_string(dim) + " disagrees with manifest");
  const std::uint64_t count = r.u64();
  if (count != manifest_count) {
    r.fail("record count " + std::to_string(count) + " disagrees with manifest count " +
           std::to_string(manifest_count));
  }
  const std::size_t record_bytes = 4 + 4 * static_cast<std::size_t>(dim);
  set.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (r.remaining() < record_bytes) {
      r.fail("truncated record " + std::to_string(i) + " of " + std::to_string(count));
    }
    EmbeddingRecord rec;
    rec.class_id = r.u32();
    if (!set.find_class(rec.class_id)) {
      r.fail("record " + std::to_string(i) + " has class id " + std::to_string(rec.class_id) +
             " missing from manifest");
    }
    rec.feature.resize(dim);
    for (float& x : rec.feature) {
      x = r.f32();
      if (!std::isfinite(x)) r.fail("non-finite feature in record " + std::to_string(i));
    }
    set.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) r.fail("trailing bytes after " + std::to_string(count) + " records");
  return set;
}

void write_token_embeddings(const TokenFile& file, const fs::path& path) {
  ByteWriter w;
  w.bytes("IOST");
  w.u32(kTokenVersion);
  w.u32(file.context_len);
  w.u32(file.dim);
  w.u64(file.classes.size());
  const std::size_t n = static_cast<std::size_t>(file.context_len) * file.dim;
  for (const auto& rec : file.classes) {
    if (rec.rows.size() != n) throw ContractError("write_token_embeddings: row block size mismatch");
    w.u32(rec.class_id);
    w.u32(rec.valid_len);
    for (float x : rec.rows) w.f32(x);
  }
  write_file(path, w.buffer());
}

TokenFile read_token_embeddings(const fs::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes, path.string());
  r.expect_magic("IOST");
  const std::size_t version_at = r.offset();
  if (r.u32() != kTokenVersion) {
    throw FormatError(path.string() + ": unsupported version at byte offset " +
                      std::to_string(version_at));
  }
  TokenFile file;
  file.context_len = r.u32();
  file.dim = r.u32();
  const std::uint64_t count = r.u64();
  const std::size_t n = static_cast<std::size_t>(file.context_len) * file.dim;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (r.remaining() < 8 + 4 * n) r.fail("truncated token record " + std::to_string(i));
    TokenRecord rec;
    rec.class_id = r.u32();
    rec.valid_len = r.u32();
    if (rec.valid_len == 0 || rec.valid_len > file.context_len) {
      r.fail("token record " + std::to_string(i) + " has invalid valid_len");
    }
    rec.rows.resize(n);
    for (float& x : rec.rows) x = r.f32();
    file.classes.push_back(std::move(rec));
  }
  if (r.remaining() != 0) r.fail("trailing bytes after token records");
  return file;
}

}  // namespace iosp::data
