#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iosp/datasets/embedding_file.hpp"
#include "iosp/datasets/splits.hpp"
#include "iosp/encoders/image_features.hpp"
#include "iosp/metrics/report.hpp"
#include "iosp/trainer/checkpoint.hpp"
#include "iosp/trainer/config.hpp"

namespace iosp::train {

struct ProtocolData {
  enc::ImageFeatureSource train;
  enc::ImageFeatureSource test;
  std::optional<data::TokenFile> tokens;
};

// Reads the paths named in `config` and checks their dimensions against it.
ProtocolData load_protocol_data(const RunConfig& config);

data::FscilSplit protocol_split(const RunConfig& config, const ProtocolData& data);

struct ProtocolHooks {
  std::filesystem::path checkpoint_dir;     // empty: keep nothing on disk
  std::optional<std::size_t> stop_after;    // total sessions to have completed
  // Called with the 0-based session index before its training loop starts.
  std::function<void(std::size_t session)> on_session_begin;
  std::function<void(const std::string& message)> on_warning;
};

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::size_t session);

// Per session: initialize, train, evaluate on every class seen so far,
// checkpoint. Returns one report per completed session.
std::vector<metrics::SessionReport> run_protocol(const RunConfig& config, ProtocolData& data,
                                                 const ProtocolHooks& hooks = {});

// Continues from the checkpoint's last completed session; the returned list
// includes the reports stored in the checkpoint.
std::vector<metrics::SessionReport> resume_protocol(const Checkpoint& checkpoint, ProtocolData& data,
                                                    const ProtocolHooks& hooks = {});

// Recomputes the report of the checkpoint's last session.
metrics::SessionReport evaluate_checkpoint(const Checkpoint& checkpoint, const ProtocolData& data);

// reports/report.json, report.csv, plotdata.txt and session_<t>.json
void write_reports(const std::filesystem::path& dir, const std::vector<metrics::SessionReport>& reports);

// Desk-scale benchmark: D=32, 6 base classes then two 2-way 5-shot sessions,
// sigma 0.1, tau 16, defaults elsewhere.
struct Benchmark {
  RunConfig config;
  ProtocolData data;
};

Benchmark synthetic_benchmark(std::uint64_t seed);

}  // namespace iosp::train
