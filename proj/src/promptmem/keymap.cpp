#include "iosp/promptmem/keymap.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "iosp/errors.hpp"

namespace iosp::pm {

namespace {

constexpr const char* kNames[] = {"keymap/w1", "keymap/b1", "keymap/w2", "keymap/b2"};

std::size_t param_count(KeyMapVariant v) { return v == KeyMapVariant::fc1 ? 2 : 4; }

}  // namespace

std::string to_string(KeyMapVariant v) {
  switch (v) {
    case KeyMapVariant::fc1: return "FC1";
    case KeyMapVariant::fc2: return "FC2";
    case KeyMapVariant::res2: return "RES2";
  }
  return "FC1";
}

KeyMapVariant keymap_variant_from_string(const std::string& s) {
  std::string upper = s;
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "FC1") return KeyMapVariant::fc1;
  if (upper == "FC2") return KeyMapVariant::fc2;
  if (upper == "RES2") return KeyMapVariant::res2;
  throw std::invalid_argument("unknown key-map variant '" + s + "' (expected FC1, FC2 or RES2)");
}

KeyMap KeyMap::create(KeyMapVariant variant, std::size_t dim, num::ParameterStore& store,
                      num::Rng& rng) {
  KeyMap km;
  km.variant_ = variant;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < param_count(variant); ++i) {
    num::Tensor t = i % 2 == 0 ? num::Tensor::matrix(dim, dim) : num::Tensor({dim}, 0.0);
    for (double& x : t.values()) x = rng.uniform(-bound, bound);
    km.params_.push_back(store.add(kNames[i], std::move(t)));
  }
  return km;
}

KeyMap KeyMap::attach(KeyMapVariant variant, const num::ParameterStore& store) {
  KeyMap km;
  km.variant_ = variant;
  for (std::size_t i = 0; i < param_count(variant); ++i) {
    auto id = store.find(kNames[i]);
    if (!id) throw FormatError(std::string("missing key-map parameter ") + kNames[i]);
    km.params_.push_back(*id);
  }
  return km;
}

num::Var KeyMap::apply(num::Tape& tape, const num::ParameterStore& store, num::Var feature) const {
  if (params_.empty()) throw ContractError("KeyMap used before initialization");
  const num::Var w1 = tape.bind(store, params_[0]);
  if (feature.value().size() != w1.value().cols()) {
    throw ContractError("compute_key: feature dimension " + std::to_string(feature.value().size()) +
                        " does not match key-map input " + std::to_string(w1.value().cols()));
  }
  num::Var hidden = num::add(num::matvec(w1, feature), tape.bind(store, params_[1]));
  if (variant_ == KeyMapVariant::fc1) return hidden;
  hidden = num::relu(hidden);
  num::Var out = num::add(num::matvec(tape.bind(store, params_[2]), hidden),
                          tape.bind(store, params_[3]));
  if (variant_ == KeyMapVariant::res2) out = num::add(out, feature);
  return out;
}

num::Tensor KeyMap::apply(const num::ParameterStore& store, std::span<const double> feature) const {
  num::Tape tape;
  const num::Var f = tape.constant(num::Tensor::vector({feature.begin(), feature.end()}));
  return apply(tape, store, f).value();
}

}  // namespace iosp::pm
