#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iosp/metrics/accuracy.hpp"

namespace iosp::metrics {

struct ClassAccuracy {
  std::uint32_t class_id = 0;
  Count count;
  friend bool operator==(const ClassAccuracy&, const ClassAccuracy&) = default;
};

struct SessionReport {
  std::size_t session = 1;  // 1-based, as printed
  Count all;
  Count base;
  Count novel;  // empty for the base session
  std::vector<ClassAccuracy> per_class;
  std::vector<double> epoch_losses;
  std::string config_digest;

  AccuracyEntry entry() const;
  friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

AccuracyMatrix accuracy_matrix(std::span<const SessionReport> reports);

// Percentage with one decimal place.
double percent_1dp(double fraction);

nlohmann::ordered_json to_json(const SessionReport& report);
SessionReport session_report_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json summary_json(std::span<const SessionReport> reports);

enum class ReportFormat { json, csv, plotdata };

ReportFormat report_format_from_string(const std::string& s);
std::string render_report(std::span<const SessionReport> reports, ReportFormat format);

// Writes the rendered report; throws SetupError when the path is not writable.
void emit_report(std::span<const SessionReport> reports, const std::filesystem::path& path,
                 ReportFormat format);

}  // namespace iosp::metrics
