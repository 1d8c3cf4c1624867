#include "iosp/promptmem/class_bank.hpp"

#include <set>

#include "iosp/encoders/token_embedding.hpp"
#include "iosp/errors.hpp"

namespace iosp::pm {

std::vector<std::size_t> ClassTokenBank::session_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& s : sessions_) sizes.push_back(s.size());
  return sizes;
}

std::size_t ClassTokenBank::class_count(std::size_t through) const {
  std::size_t n = 0;
  for (std::size_t s = 0; s <= through && s < sessions_.size(); ++s) n += sessions_[s].size();
  return n;
}

std::vector<const ClassEntry*> ClassTokenBank::flattened(std::size_t through) const {
  std::vector<const ClassEntry*> out;
  for (std::size_t s = 0; s <= through && s < sessions_.size(); ++s) {
    for (const auto& e : sessions_[s]) out.push_back(&e);
  }
  return out;
}

std::optional<std::size_t> ClassTokenBank::flat_index(std::uint32_t class_id,
                                                      std::size_t through) const {
  std::size_t i = 0;
  for (std::size_t s = 0; s <= through && s < sessions_.size(); ++s) {
    for (const auto& e : sessions_[s]) {
      if (e.class_id == class_id) return i;
      ++i;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> ClassTokenBank::owner(std::uint32_t class_id) const {
  for (std::size_t s = 0; s < sessions_.size(); ++s) {
    for (const auto& e : sessions_[s]) {
      if (e.class_id == class_id) return s;
    }
  }
  return std::nullopt;
}

bool ClassTokenBank::has_name(const std::string& name) const {
  for (const auto& s : sessions_) {
    for (const auto& e : s) {
      if (e.name == name) return true;
    }
  }
  return false;
}

std::string class_embedding_name(std::size_t session, std::size_t index) {
  return "class_embedding/s" + std::to_string(session) + "/c" + std::to_string(index);
}

void init_class_embeddings(std::span<const ClassSpec> classes, std::uint64_t seed,
                           std::size_t context_len, std::size_t dim, ClassTokenBank& bank,
                           num::ParameterStore& store, const data::TokenFile* tokens) {
  if (classes.empty()) throw SetupError("init_class_embeddings: session has no classes");
  std::set<std::string> names;
  std::set<std::uint32_t> ids;
  for (const auto& c : classes) {
    if (c.name.empty()) throw SetupError("init_class_embeddings: empty class name");
    if (bank.has_name(c.name) || !names.insert(c.name).second) {
      throw SetupError("class '" + c.name + "' appears in more than one session");
    }
    if (bank.owner(c.id) || !ids.insert(c.id).second) {
      throw SetupError("class id " + std::to_string(c.id) + " appears in more than one session");
    }
  }
  if (tokens && (tokens->context_len != context_len || tokens->dim != dim)) {
    throw SetupError("token file shape [" + std::to_string(tokens->context_len) + "x" +
                     std::to_string(tokens->dim) + "] does not match the engine");
  }

  const std::size_t session = bank.session_count();
  std::vector<ClassEntry> entries;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    ClassEntry entry{c.id, c.name, 0, 0};
    num::Tensor matrix;
    if (tokens) {
      const data::TokenRecord* rec = tokens->find(c.id);
      if (!rec) throw SetupError("token file lacks class id " + std::to_string(c.id));
      std::vector<double> widened(rec->rows.begin(), rec->rows.end());
      matrix = num::Tensor({context_len, dim}, std::move(widened));
      entry.valid_len = rec->valid_len;
    } else {
      auto emb = enc::tokenize_embed("a photo of a " + c.name, seed, context_len, dim);
      matrix = std::move(emb.matrix);
      entry.valid_len = emb.valid_len;
    }
    entry.embedding = store.add(class_embedding_name(session, i), std::move(matrix));
    entries.push_back(std::move(entry));
  }
  bank.push_session(std::move(entries));
}

}  // namespace iosp::pm
