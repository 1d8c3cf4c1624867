#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iosp/datasets/synthetic.hpp"
#include "iosp/metrics/report.hpp"
#include "iosp/trainer/config.hpp"

namespace iosp::cli {

// Strict JSON config; data paths are taken as written (relative to the cwd).
train::RunConfig parse_config(const std::filesystem::path& path);

// --seed wins over IOSF_SEED, which wins over the config file.
void apply_seed_override(train::RunConfig& config, std::optional<std::uint64_t> flag_seed);

void gen_synthetic(const data::SyntheticSpec& spec, const std::filesystem::path& out);

// Writes <out>/config.json, <out>/checkpoints/session_<t>.iosc and <out>/reports/.
std::vector<metrics::SessionReport> run(const train::RunConfig& config, const std::filesystem::path& out);

std::vector<metrics::SessionReport> resume(const std::filesystem::path& checkpoint,
                                           const std::filesystem::path& out);

// Writes <out>/session_<t>.json for the checkpoint's last session.
metrics::SessionReport eval(const std::filesystem::path& checkpoint, const std::filesystem::path& out);

// One run per update scope under <out>/<scope>/ plus <out>/ablate_scope.csv.
std::string ablate_scope(const train::RunConfig& config, const std::filesystem::path& out);

struct HparamSweep {
  std::vector<std::size_t> top_k;                                // K_pr values
  std::vector<std::pair<std::size_t, std::size_t>> pair_counts;  // (N^1, N^t)
};

// "1,3,5" -> {1, 3, 5}; "20:3,40:5" -> {(20, 3), (40, 5)}. Throws ConfigError.
std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key);
std::vector<std::pair<std::size_t, std::size_t>> parse_pair_list(const std::string& text,
                                                                 const std::string& key);

// One row per swept value; writes <out>/ablate_hparam.csv.
std::string ablate_hparam(const train::RunConfig& config, const HparamSweep& sweep,
                          const std::filesystem::path& out);

// Renders the report history stored in a checkpoint.
std::string report(const std::filesystem::path& checkpoint, metrics::ReportFormat format);

}  // namespace iosp::cli
