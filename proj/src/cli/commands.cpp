#include "iosp/cli/commands.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iosp/datasets/binary_io.hpp"
#include "iosp/errors.hpp"
#include "iosp/trainer/protocol.hpp"

namespace iosp::cli {

namespace fs = std::filesystem;

namespace {

std::string pct(const std::optional<double>& fraction) {
  if (!fraction) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", metrics::percent_1dp(*fraction));
  return buf;
}

std::string summary_row(const std::vector<metrics::SessionReport>& reports) {
  const auto s = metrics::summarize(metrics::accuracy_matrix(reports), reports.size());
  return pct(s.avg) + "," + pct(s.pd) + "," + pct(s.nla) + "," + pct(s.bma) + "," +
         pct(reports.back().all.fraction());
}

std::size_t parse_size(const std::string& item, const std::string& key) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(item, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != item.size() || item.front() == '-') {
    throw ConfigError(key, "'" + item + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

train::RunConfig parse_config(const fs::path& path) {
  std::string text;
  try {
    text = data::read_text_file(path);
  } catch (const Error&) {
    throw ConfigError("--config", "cannot read " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return train::config_from_json(j);
}

void apply_seed_override(train::RunConfig& config, std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) {
    config.seed = *flag_seed;
    return;
  }
  if (const char* env = std::getenv("IOSF_SEED"); env != nullptr && *env != '\0') {
    config.seed = parse_size(env, "IOSF_SEED");
  }
}

void gen_synthetic(const data::SyntheticSpec& spec, const fs::path& out) {
  data::SyntheticDataset ds;
  try {
    ds = data::gen_synthetic(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sigma", e.what());
  }
  data::write_synthetic(ds, out);
}

std::vector<metrics::SessionReport> run(const train::RunConfig& config, const fs::path& out) {
  train::validate(config);
  train::ProtocolData data = train::load_protocol_data(config);
  data::write_text_file(out / "config.json", train::to_json(config).dump(2) + "\n");
  train::ProtocolHooks hooks;
  hooks.checkpoint_dir = out / "checkpoints";
  hooks.on_warning = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  auto reports = train::run_protocol(config, data, hooks);
  train::write_reports(out / "reports", reports);
  return reports;
}

std::vector<metrics::SessionReport> resume(const fs::path& checkpoint, const fs::path& out) {
  const train::Checkpoint c = train::load_checkpoint(checkpoint);
  train::ProtocolData data = train::load_protocol_data(c.config);
  data::write_text_file(out / "config.json", train::to_json(c.config).dump(2) + "\n");
  train::ProtocolHooks hooks;
  hooks.checkpoint_dir = out / "checkpoints";
  hooks.on_warning = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  auto reports = train::resume_protocol(c, data, hooks);
  train::write_reports(out / "reports", reports);
  return reports;
}

metrics::SessionReport eval(const fs::path& checkpoint, const fs::path& out) {
  const train::Checkpoint c = train::load_checkpoint(checkpoint);
  const train::ProtocolData data = train::load_protocol_data(c.config);
  metrics::SessionReport r = train::evaluate_checkpoint(c, data);
  data::write_text_file(out / ("session_" + std::to_string(r.session) + ".json"),
                        metrics::to_json(r).dump(2) + "\n");
  return r;
}

std::string ablate_scope(const train::RunConfig& config, const fs::path& out) {
  train::validate(config);
  std::string table = "scope,AVG,PD,NLA,BMA,final_all\n";
  for (auto scope : {train::UpdateScope::current_only, train::UpdateScope::plus_keymap,
                     train::UpdateScope::all_params}) {
    train::RunConfig c = config;
    c.update_scope = scope;
    table += train::to_string(scope) + "," + summary_row(run(c, out / train::to_string(scope))) + "\n";
  }
  data::write_text_file(out / "ablate_scope.csv", table);
  return table;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_size(item, key));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pair_list(const std::string& text,
                                                                 const std::string& key) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ConfigError(key, "'" + item + "' is not of the form N1:Nt");
    out.emplace_back(parse_size(parts[0], key), parse_size(parts[1], key));
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

std::string ablate_hparam(const train::RunConfig& config, const HparamSweep& sweep,
                          const fs::path& out) {
  if (sweep.top_k.empty() == sweep.pair_counts.empty()) {
    throw ConfigError("--topk/--pairs", "give exactly one sweep axis");
  }
  std::vector<train::RunConfig> grid;
  std::vector<std::string> labels;
  std::string header;
  if (!sweep.top_k.empty()) {
    header = "top_k";
    for (std::size_t k : sweep.top_k) {
      train::RunConfig c = config;
      c.top_k = k;
      grid.push_back(c);
      labels.push_back(std::to_string(k));
    }
  } else {
    header = "pairs_base,pairs_inc";
    for (auto [base, inc] : sweep.pair_counts) {
      train::RunConfig c = config;
      c.pairs_base = base;
      c.pairs_inc = inc;
      grid.push_back(c);
      labels.push_back(std::to_string(base) + "," + std::to_string(inc));
    }
  }
  for (const auto& c : grid) train::validate(c);

  std::string table = header + ",AVG,PD,NLA,BMA,final_all\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::string dir = labels[i];
    for (char& ch : dir) {
      if (ch == ',') ch = '_';
    }
    table += labels[i] + "," + summary_row(run(grid[i], out / (header.substr(0, 5) + "_" + dir))) + "\n";
  }
  data::write_text_file(out / "ablate_hparam.csv", table);
  return table;
}

std::string report(const fs::path& checkpoint, metrics::ReportFormat format) {
  const train::Checkpoint c = train::load_checkpoint(checkpoint);
  return metrics::render_report(c.reports, format);
}

}  // namespace iosp::cli
