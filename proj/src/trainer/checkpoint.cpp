#include "iosp/trainer/checkpoint.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "iosp/datasets/binary_io.hpp"
#include "iosp/errors.hpp"

namespace iosp::train {

namespace {

using nlohmann::ordered_json;

constexpr std::uint32_t kVersion = 1;
constexpr const char* kVelocityPrefix = "velocity:";

ordered_json tensor_entry(const std::string& name, const num::Tensor& t, std::uint64_t& offset) {
  ordered_json e;
  e["name"] = name;
  e["shape"] = t.shape();
  e["offset"] = offset;
  offset += t.size() * sizeof(float);
  return e;
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("checkpoint manifest lacks '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("checkpoint manifest field '") + key + "' has the wrong type");
  }
}

}  // namespace

Checkpoint capture(const Learner& learner, std::vector<metrics::SessionReport> reports) {
  Checkpoint c;
  c.config = learner.config();
  c.model = learner.model();
  c.optimizer = learner.optimizer();
  c.rng_state = learner.rng().state();
  c.reports = std::move(reports);
  return c;
}

Learner restore_learner(const Checkpoint& checkpoint) {
  num::Rng rng;
  rng.restore(checkpoint.rng_state);
  return Learner::restore(checkpoint.config, checkpoint.model, checkpoint.optimizer, rng);
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& c) {
  const auto& store = c.model.params;
  ordered_json m;
  m["version"] = kVersion;
  m["config"] = to_json(c.config);
  m["session_count"] = c.session_count();
  m["rng_state"] = c.rng_state;
  m["encoder_digest"] = enc::TextEncoder(c.config.dim, c.config.context_len, c.config.seed).digest();

  ordered_json bank = ordered_json::array();
  for (std::size_t s = 0; s < c.model.bank.session_count(); ++s) {
    ordered_json session = ordered_json::array();
    for (const auto& e : c.model.bank.session(s)) {
      session.push_back({{"id", e.class_id}, {"name", e.name}, {"valid_len", e.valid_len},
                         {"tensor", store.name(e.embedding)}});
    }
    bank.push_back(std::move(session));
  }
  m["bank"] = std::move(bank);

  ordered_json pairs = ordered_json::array();
  for (const auto& session : c.model.pairs) {
    ordered_json row = ordered_json::array();
    for (const auto& p : session) {
      row.push_back({{"key", store.name(p.key)}, {"prompt", store.name(p.prompt)},
                     {"source_class", p.source_class}});
    }
    pairs.push_back(std::move(row));
  }
  m["pairs"] = std::move(pairs);
  m["keymap"] = pm::to_string(c.model.keymap.variant());

  std::uint64_t offset = 0;
  ordered_json tensors = ordered_json::array();
  for (num::ParamId id = 0; id < store.size(); ++id) {
    tensors.push_back(tensor_entry(store.name(id), store.value(id), offset));
  }
  for (const auto& [id, v] : c.optimizer.velocities()) {
    tensors.push_back(tensor_entry(kVelocityPrefix + store.name(id), v, offset));
  }
  m["tensors"] = std::move(tensors);

  ordered_json reports = ordered_json::array();
  for (const auto& r : c.reports) reports.push_back(metrics::to_json(r));
  m["reports"] = std::move(reports);

  const std::string manifest = m.dump();
  data::ByteWriter w;
  w.bytes("IOSC");
  w.u32(kVersion);
  w.u64(manifest.size());
  w.bytes(manifest);
  const auto put = [&](const num::Tensor& t) {
    for (double x : t.values()) w.f32(static_cast<float>(x));
  };
  for (num::ParamId id = 0; id < store.size(); ++id) put(store.value(id));
  for (const auto& [_, v] : c.optimizer.velocities()) put(v);
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const unsigned char> bytes, const std::string& source) {
  data::ByteReader r(bytes, source);
  r.expect_magic("IOSC");
  const std::uint32_t version = r.u32();
  if (version != kVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t manifest_len = r.u64();
  if (manifest_len > r.remaining()) r.fail("manifest length exceeds file size");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(manifest_len)));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("corrupt checkpoint manifest: " + std::string(e.what()));
  }

  Checkpoint c;
  try {
    c.config = config_from_json(field<nlohmann::json>(m, "config"));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config echo is invalid: ") + e.what());
  }
  c.rng_state = field<std::string>(m, "rng_state");
  {
    num::Rng probe;
    probe.restore(c.rng_state);
  }
  if (field<std::string>(m, "encoder_digest") !=
      enc::TextEncoder(c.config.dim, c.config.context_len, c.config.seed).digest()) {
    throw FormatError("checkpoint encoder digest does not match its config echo");
  }

  auto& store = c.model.params;
  const auto tensors = field<nlohmann::json>(m, "tensors");
  if (!tensors.is_array()) throw FormatError("checkpoint 'tensors' is not an array");
  std::uint64_t expected_offset = 0;
  for (const auto& entry : tensors) {
    const auto name = field<std::string>(entry, "name");
    const auto shape = field<std::vector<std::size_t>>(entry, "shape");
    const auto offset = field<std::uint64_t>(entry, "offset");
    if (offset != expected_offset) r.fail("tensor '" + name + "' has a non-contiguous offset");
    num::Tensor t(shape, 0.0);
    for (double& x : t.values()) {
      const float f = r.f32();
      if (!std::isfinite(f)) r.fail("tensor '" + name + "' holds a non-finite value");
      x = f;
    }
    expected_offset += t.size() * sizeof(float);
    if (name.rfind(kVelocityPrefix, 0) == 0) {
      const auto owner = store.find(name.substr(std::char_traits<char>::length(kVelocityPrefix)));
      if (!owner) r.fail("velocity '" + name + "' has no parameter");
      if (!store.value(*owner).same_shape(t)) r.fail("velocity '" + name + "' shape mismatch");
      c.optimizer.velocities().emplace(*owner, std::move(t));
    } else {
      if (store.find(name)) r.fail("duplicate tensor '" + name + "'");
      store.add(name, std::move(t));
    }
  }
  if (r.remaining() != 0) {
    r.fail("trailing " + std::to_string(r.remaining()) + " bytes after the tensor blobs");
  }
  c.optimizer = [&] {
    num::SgdState s(c.config.sgd());
    s.velocities() = std::move(c.optimizer.velocities());
    return s;
  }();

  const auto require = [&](const std::string& name) {
    auto id = store.find(name);
    if (!id) throw FormatError("checkpoint references missing tensor '" + name + "'");
    return *id;
  };
  const auto require_shape = [&](num::ParamId id, std::vector<std::size_t> shape) {
    if (store.value(id).shape() != shape) {
      throw FormatError("tensor '" + store.name(id) + "' has shape " + store.value(id).shape_string() +
                        ", inconsistent with the config echo");
    }
  };
  const std::vector<std::size_t> token_shape{c.config.context_len, c.config.dim};

  for (const auto& session : field<nlohmann::json>(m, "bank")) {
    std::vector<pm::ClassEntry> entries;
    for (const auto& e : session) {
      pm::ClassEntry ce;
      ce.class_id = field<std::uint32_t>(e, "id");
      ce.name = field<std::string>(e, "name");
      ce.valid_len = field<std::size_t>(e, "valid_len");
      ce.embedding = require(field<std::string>(e, "tensor"));
      require_shape(ce.embedding, token_shape);
      entries.push_back(std::move(ce));
    }
    c.model.bank.push_session(std::move(entries));
  }

  const auto pairs = field<nlohmann::json>(m, "pairs");
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    std::vector<pm::KeyPromptPair> row;
    for (std::size_t i = 0; i < pairs[s].size(); ++i) {
      pm::KeyPromptPair p;
      p.key = require(field<std::string>(pairs[s][i], "key"));
      p.prompt = require(field<std::string>(pairs[s][i], "prompt"));
      p.source_class = field<std::ptrdiff_t>(pairs[s][i], "source_class");
      p.owner_session = s;
      p.index_in_session = i;
      require_shape(p.key, {c.config.dim});
      require_shape(p.prompt, token_shape);
      row.push_back(p);
    }
    c.model.pairs.push_back(std::move(row));
  }
  if (c.model.pairs.size() != c.model.bank.session_count() ||
      field<std::size_t>(m, "session_count") != c.model.bank.session_count()) {
    throw FormatError("checkpoint session count is inconsistent");
  }

  try {
    c.model.keymap = pm::KeyMap::attach(pm::keymap_variant_from_string(field<std::string>(m, "keymap")), store);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint key-map: ") + e.what());
  }
  for (num::ParamId id : c.model.keymap.params()) {
    const auto& t = store.value(id);
    if (t.shape().back() != c.config.dim || (t.shape().size() == 2 && t.shape()[0] != c.config.dim)) {
      throw FormatError("key-map tensor '" + store.name(id) + "' is inconsistent with the config echo");
    }
  }

  for (const auto& rj : field<nlohmann::json>(m, "reports")) {
    try {
      c.reports.push_back(metrics::session_report_from_json(rj));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("checkpoint report history: ") + e.what());
    }
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  data::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = data::read_file(path);
  return decode_checkpoint(bytes, path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const RunConfig& expected) {
  Checkpoint c = load_checkpoint(path);
  if (c.config.dim != expected.dim) {
    throw FormatError("checkpoint dim " + std::to_string(c.config.dim) + " does not match configured dim " +
                      std::to_string(expected.dim));
  }
  if (c.config.context_len != expected.context_len) {
    throw FormatError("checkpoint context_len " + std::to_string(c.config.context_len) +
                      " does not match configured context_len " + std::to_string(expected.context_len));
  }
  return c;
}

}  // namespace iosp::train
