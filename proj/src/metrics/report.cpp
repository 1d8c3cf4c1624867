#include "iosp/metrics/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "iosp/datasets/binary_io.hpp"
#include "iosp/errors.hpp"

namespace iosp::metrics {

using ordered_json = nlohmann::ordered_json;

AccuracyEntry SessionReport::entry() const {
  AccuracyEntry e;
  e.all = all.fraction().value_or(0.0);
  e.base = base.fraction().value_or(0.0);
  e.novel = novel.fraction();
  return e;
}

AccuracyMatrix accuracy_matrix(std::span<const SessionReport> reports) {
  AccuracyMatrix m;
  for (const auto& r : reports) m.push_back(r.entry());
  return m;
}

double percent_1dp(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

namespace {

ordered_json pct_or_null(const Count& c) {
  const auto f = c.fraction();
  return f ? ordered_json(percent_1dp(*f)) : ordered_json(nullptr);
}

ordered_json counts(const Count& c) { return ordered_json::array({c.correct, c.total}); }

Count count_from(const ordered_json& j) { return {j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint64_t>()}; }

std::string fmt_pct(const std::optional<double>& f) {
  if (!f) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", percent_1dp(*f));
  return buf;
}

}  // namespace

ordered_json to_json(const SessionReport& r) {
  ordered_json j;
  j["session"] = r.session;
  j["accuracy_pct"] = {{"all", pct_or_null(r.all)}, {"base", pct_or_null(r.base)},
                       {"novel", pct_or_null(r.novel)}};
  j["counts"] = {{"all", counts(r.all)}, {"base", counts(r.base)}, {"novel", counts(r.novel)}};
  j["per_class"] = ordered_json::array();
  for (const auto& c : r.per_class) {
    j["per_class"].push_back(
        {{"class_id", c.class_id}, {"correct", c.count.correct}, {"total", c.count.total}});
  }
  j["epoch_losses"] = r.epoch_losses;
  j["config_digest"] = r.config_digest;
  return j;
}

SessionReport session_report_from_json(const ordered_json& j) {
  try {
    SessionReport r;
    r.session = j.at("session").get<std::size_t>();
    const auto& c = j.at("counts");
    r.all = count_from(c.at("all"));
    r.base = count_from(c.at("base"));
    r.novel = count_from(c.at("novel"));
    for (const auto& pc : j.at("per_class")) {
      r.per_class.push_back({pc.at("class_id").get<std::uint32_t>(),
                             {pc.at("correct").get<std::uint64_t>(), pc.at("total").get<std::uint64_t>()}});
    }
    r.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    r.config_digest = j.at("config_digest").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed session report: ") + e.what());
  }
}

ordered_json summary_json(std::span<const SessionReport> reports) {
  const Summary s = summarize(accuracy_matrix(reports), reports.size());
  ordered_json j;
  j["sessions"] = reports.size();
  j["AVG"] = percent_1dp(s.avg);
  j["PD"] = percent_1dp(s.pd);
  j["NLA"] = s.nla ? ordered_json(percent_1dp(*s.nla)) : ordered_json(nullptr);
  j["BMA"] = percent_1dp(s.bma);
  return j;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "plotdata") return ReportFormat::plotdata;
  throw std::invalid_argument("unknown report format '" + s + "'");
}

std::string render_report(std::span<const SessionReport> reports, ReportFormat format) {
  if (reports.empty()) throw SetupError("emit_report: no session reports");
  std::ostringstream out;
  switch (format) {
    case ReportFormat::json: {
      ordered_json j;
      j["sessions"] = ordered_json::array();
      for (const auto& r : reports) j["sessions"].push_back(to_json(r));
      j["summary"] = summary_json(reports);
      out << j.dump(2) << "\n";
      break;
    }
    case ReportFormat::csv: {
      out << "session,all_pct,base_pct,novel_pct,all_correct,all_total,base_correct,base_total,"
             "novel_correct,novel_total\n";
      for (const auto& r : reports) {
        out << r.session << ',' << fmt_pct(r.all.fraction()) << ',' << fmt_pct(r.base.fraction())
            << ',' << fmt_pct(r.novel.fraction()) << ',' << r.all.correct << ',' << r.all.total
            << ',' << r.base.correct << ',' << r.base.total << ',' << r.novel.correct << ','
            << r.novel.total << '\n';
      }
      break;
    }
    case ReportFormat::plotdata: {
      out << "# session all_pct\n";
      for (const auto& r : reports) out << r.session << ' ' << fmt_pct(r.all.fraction()) << '\n';
      break;
    }
  }
  return out.str();
}

void emit_report(std::span<const SessionReport> reports, const std::filesystem::path& path,
                 ReportFormat format) {
  const std::string text = render_report(reports, format);
  try {
    data::write_text_file(path, text);
  } catch (const std::filesystem::filesystem_error& e) {
    throw SetupError(std::string("cannot write report: ") + e.what());
  }
}

}  // namespace iosp::metrics
