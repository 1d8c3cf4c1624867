#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iosp/datasets/embedding_file.hpp"
#include "iosp/numkernel/autodiff.hpp"

namespace iosp::pm {

struct ClassSpec {
  std::uint32_t id = 0;
  std::string name;
};

struct ClassEntry {
  std::uint32_t class_id = 0;
  std::string name;
  std::size_t valid_len = 0;
  num::ParamId embedding = 0;  // (context_len x dim) token matrix
};

// Class-wise token embeddings grouped by session (0-based). Class order inside
// the flattened view is session-ascending, then insertion order.
class ClassTokenBank {
 public:
  std::size_t session_count() const noexcept { return sessions_.size(); }
  const std::vector<ClassEntry>& session(std::size_t s) const { return sessions_.at(s); }
  std::vector<std::size_t> session_sizes() const;

  // Number of classes in sessions 0..through.
  std::size_t class_count(std::size_t through) const;
  std::vector<const ClassEntry*> flattened(std::size_t through) const;
  std::optional<std::size_t> flat_index(std::uint32_t class_id, std::size_t through) const;
  // Session that owns the class, if any.
  std::optional<std::size_t> owner(std::uint32_t class_id) const;

  bool has_name(const std::string& name) const;
  void push_session(std::vector<ClassEntry> entries) { sessions_.push_back(std::move(entries)); }

 private:
  std::vector<std::vector<ClassEntry>> sessions_;
};

std::string class_embedding_name(std::size_t session, std::size_t index);

// Initializes E^t_i from the tokenized prompt "a photo of a <name>" (or from
// the matching row block of `tokens` when provided) and appends the session
// to `bank`. Class names and ids must be unique across all sessions.
void init_class_embeddings(std::span<const ClassSpec> classes, std::uint64_t seed,
                           std::size_t context_len, std::size_t dim, ClassTokenBank& bank,
                           num::ParameterStore& store, const data::TokenFile* tokens = nullptr);

}  // namespace iosp::pm
