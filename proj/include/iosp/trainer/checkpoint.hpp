#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iosp/metrics/report.hpp"
#include "iosp/trainer/learner.hpp"

namespace iosp::train {

// Everything needed to continue a run after its last completed session.
struct Checkpoint {
  RunConfig config;
  pm::PromptModel model;
  num::SgdState optimizer;
  std::string rng_state;
  std::vector<metrics::SessionReport> reports;  // one per completed session

  std::size_t session_count() const noexcept { return model.bank.session_count(); }
};

Checkpoint capture(const Learner& learner, std::vector<metrics::SessionReport> reports);
Learner restore_learner(const Checkpoint& checkpoint);

// IOSC container: "IOSC", u32 version, u64 manifest length, JSON manifest,
// then every tensor as little-endian float32 in manifest order.
std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const unsigned char> bytes, const std::string& source = {});

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also rejects a checkpoint whose dimensions disagree with `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const RunConfig& expected);

}  // namespace iosp::train
