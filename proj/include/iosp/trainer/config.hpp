#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "iosp/numkernel/sgd.hpp"
#include "iosp/promptmem/keymap.hpp"

namespace iosp::train {

// Which parameters an incremental session may update.
enum class UpdateScope {
  current_only,  // E^t, k^t, Pr^t
  plus_keymap,   // ... and the key-map
  all_params,    // every parameter of every session
};

enum class PairInit {
  embedding,         // class-embedding initialization in every session
  incremental_only,  // random in the base session, class-embedding afterwards
  random,            // random in every session
};

std::string to_string(UpdateScope s);
std::string to_string(PairInit p);

struct RunConfig {
  std::size_t dim = 32;
  std::size_t context_len = 16;
  std::uint64_t seed = 0;
  double tau = 1.0;
  std::size_t pairs_base = 20;
  std::size_t pairs_inc = 3;
  std::size_t top_k = 3;
  double lr = 0.002;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t batch_size = 16;
  std::size_t epochs_base = 5;
  std::size_t epochs_inc = 3;
  pm::KeyMapVariant keymap = pm::KeyMapVariant::fc1;
  UpdateScope update_scope = UpdateScope::current_only;
  PairInit pair_init = PairInit::embedding;
  std::size_t base_classes = 60;
  std::size_t ways = 5;
  std::size_t shots = 5;
  std::size_t sessions = 9;
  std::string train_path;
  std::string test_path;
  std::string token_path;  // optional IOSF-TOK file

  num::SgdConfig sgd() const { return {lr, momentum, weight_decay}; }
  std::size_t pairs_for(std::size_t session) const { return session == 0 ? pairs_base : pairs_inc; }
  std::size_t epochs_for(std::size_t session) const { return session == 0 ? epochs_base : epochs_inc; }
};

nlohmann::ordered_json to_json(const RunConfig& config);

// Strict: unknown keys and type mismatches raise ConfigError naming the key.
// Missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);

// Throws ConfigError on out-of-range values.
void validate(const RunConfig& config);

std::string config_digest(const RunConfig& config);

}  // namespace iosp::train
