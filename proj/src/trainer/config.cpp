#include "iosp/trainer/config.hpp"

#include <functional>
#include <map>
#include <stdexcept>

#include "iosp/errors.hpp"
#include "iosp/numkernel/digest.hpp"

namespace iosp::train {

using ordered_json = nlohmann::ordered_json;

std::string to_string(UpdateScope s) {
  switch (s) {
    case UpdateScope::current_only: return "current_only";
    case UpdateScope::plus_keymap: return "plus_keymap";
    case UpdateScope::all_params: return "all_params";
  }
  return "current_only";
}

std::string to_string(PairInit p) {
  switch (p) {
    case PairInit::embedding: return "embedding";
    case PairInit::incremental_only: return "incremental_only";
    case PairInit::random: return "random";
  }
  return "embedding";
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["dim"] = c.dim;
  j["context_len"] = c.context_len;
  j["seed"] = c.seed;
  j["tau"] = c.tau;
  j["pairs_base"] = c.pairs_base;
  j["pairs_inc"] = c.pairs_inc;
  j["top_k"] = c.top_k;
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["epochs_base"] = c.epochs_base;
  j["epochs_inc"] = c.epochs_inc;
  j["keymap"] = pm::to_string(c.keymap);
  j["update_scope"] = to_string(c.update_scope);
  j["pair_init"] = to_string(c.pair_init);
  j["base_classes"] = c.base_classes;
  j["ways"] = c.ways;
  j["shots"] = c.shots;
  j["sessions"] = c.sessions;
  j["train_path"] = c.train_path;
  j["test_path"] = c.test_path;
  j["token_path"] = c.token_path;
  return j;
}

namespace {

template <typename T>
T from_string(const std::string& key, const std::string& value,
              const std::map<std::string, T>& options) {
  auto it = options.find(value);
  if (it == options.end()) throw ConfigError(key, "unrecognized value '" + value + "'");
  return it->second;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  RunConfig c;

  const auto count = [](std::size_t& field) {
    return [&field](const std::string& key, const nlohmann::json& v) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError(key, "expected a non-negative integer");
      }
      field = v.get<std::size_t>();
    };
  };
  const auto real = [](double& field) {
    return [&field](const std::string& key, const nlohmann::json& v) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
      field = v.get<double>();
    };
  };
  const auto text = [](std::string& field) {
    return [&field](const std::string& key, const nlohmann::json& v) {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
      field = v.get<std::string>();
    };
  };

  std::string keymap = pm::to_string(c.keymap);
  std::string scope = to_string(c.update_scope);
  std::string init = to_string(c.pair_init);
  std::size_t seed = c.seed;

  const std::map<std::string, std::function<void(const std::string&, const nlohmann::json&)>> fields{
      {"dim", count(c.dim)},
      {"context_len", count(c.context_len)},
      {"seed", count(seed)},
      {"tau", real(c.tau)},
      {"pairs_base", count(c.pairs_base)},
      {"pairs_inc", count(c.pairs_inc)},
      {"top_k", count(c.top_k)},
      {"lr", real(c.lr)},
      {"momentum", real(c.momentum)},
      {"weight_decay", real(c.weight_decay)},
      {"batch_size", count(c.batch_size)},
      {"epochs_base", count(c.epochs_base)},
      {"epochs_inc", count(c.epochs_inc)},
      {"keymap", text(keymap)},
      {"update_scope", text(scope)},
      {"pair_init", text(init)},
      {"base_classes", count(c.base_classes)},
      {"ways", count(c.ways)},
      {"shots", count(c.shots)},
      {"sessions", count(c.sessions)},
      {"train_path", text(c.train_path)},
      {"test_path", text(c.test_path)},
      {"token_path", text(c.token_path)},
  };

  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(key, "unknown key");
    it->second(key, value);
  }
  c.seed = seed;
  try {
    c.keymap = pm::keymap_variant_from_string(keymap);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("keymap", e.what());
  }
  c.update_scope = from_string<UpdateScope>("update_scope", scope,
                                            {{"current_only", UpdateScope::current_only},
                                             {"plus_keymap", UpdateScope::plus_keymap},
                                             {"all_params", UpdateScope::all_params}});
  c.pair_init = from_string<PairInit>("pair_init", init,
                                      {{"embedding", PairInit::embedding},
                                       {"incremental_only", PairInit::incremental_only},
                                       {"random", PairInit::random}});
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  const auto positive = [](const char* key, std::size_t v) {
    if (v == 0) throw ConfigError(key, "must be positive");
  };
  positive("dim", c.dim);
  positive("context_len", c.context_len);
  positive("pairs_base", c.pairs_base);
  positive("pairs_inc", c.pairs_inc);
  positive("top_k", c.top_k);
  positive("batch_size", c.batch_size);
  positive("base_classes", c.base_classes);
  positive("sessions", c.sessions);
  if (!(c.tau > 0.0)) throw ConfigError("tau", "must be positive");
  if (!(c.lr >= 0.0)) throw ConfigError("lr", "must be non-negative");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be non-negative");
  if (c.top_k > c.pairs_base) {
    throw ConfigError("top_k", "exceeds the base-session pool of " + std::to_string(c.pairs_base) +
                                   " key-prompt pairs");
  }
  if (c.sessions > 1) {
    positive("ways", c.ways);
    positive("shots", c.shots);
  }
}

std::string config_digest(const RunConfig& config) {
  const std::string text = to_json(config).dump();
  return num::sha256_hex(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace iosp::train
