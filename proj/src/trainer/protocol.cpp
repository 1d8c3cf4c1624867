#include "iosp/trainer/protocol.hpp"

#include "iosp/datasets/binary_io.hpp"
#include "iosp/datasets/synthetic.hpp"
#include "iosp/errors.hpp"
#include "iosp/numkernel/rng.hpp"

namespace iosp::train {

namespace {

std::vector<pm::ClassSpec> class_specs(const enc::ImageFeatureSource& source,
                                       const std::vector<std::uint32_t>& ids) {
  std::vector<pm::ClassSpec> out;
  for (std::uint32_t id : ids) {
    pm::ClassSpec spec{id, {}};
    for (const auto& c : source.classes()) {
      if (c.id == id) spec.name = c.name;
    }
    if (spec.name.empty()) throw SetupError("class " + std::to_string(id) + " has no name");
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<metrics::SessionReport> continue_protocol(Learner& learner,
                                                      std::vector<metrics::SessionReport> reports,
                                                      ProtocolData& data, const ProtocolHooks& hooks) {
  const RunConfig& config = learner.config();
  const data::FscilSplit split = protocol_split(config, data);
  const std::size_t last = std::min(config.sessions, hooks.stop_after.value_or(config.sessions));
  const data::TokenFile* tokens = data.tokens ? &*data.tokens : nullptr;

  for (std::size_t t = learner.session_count(); t < last; ++t) {
    const auto& session = split.sessions[t];
    learner.begin_session(class_specs(data.train, session.classes), tokens);
    if (hooks.on_session_begin) hooks.on_session_begin(t);

    TrainView view{&data.train, session.train};
    SessionState state =
        t == 0 ? learner.train_base_session(view) : learner.train_incremental_session(view);
    learner.canonicalize();
    if (hooks.on_warning) {
      for (const auto& m : state.warnings.messages) hooks.on_warning("session " + std::to_string(t + 1) + ": " + m);
    }

    metrics::SessionReport report = learner.evaluate(data.test, session.test);
    report.epoch_losses = state.epoch_losses;
    reports.push_back(std::move(report));

    if (!hooks.checkpoint_dir.empty()) {
      save_checkpoint(capture(learner, reports), checkpoint_path(hooks.checkpoint_dir, t + 1));
    }
  }
  return reports;
}

}  // namespace

ProtocolData load_protocol_data(const RunConfig& config) {
  if (config.train_path.empty()) throw ConfigError("train_path", "required");
  if (config.test_path.empty()) throw ConfigError("test_path", "required");
  ProtocolData d;
  d.train = enc::load_image_features(config.train_path);
  d.test = enc::load_image_features(config.test_path);
  if (d.train.dim() != config.dim || d.test.dim() != config.dim) {
    throw ConfigError("dim", "configured " + std::to_string(config.dim) + " but features have dim " +
                                 std::to_string(d.train.dim()) + "/" + std::to_string(d.test.dim()));
  }
  if (!config.token_path.empty()) {
    d.tokens = data::read_token_embeddings(config.token_path);
    if (d.tokens->dim != config.dim || d.tokens->context_len != config.context_len) {
      throw FormatError("token file " + config.token_path + " has shape " +
                        std::to_string(d.tokens->context_len) + "x" + std::to_string(d.tokens->dim) +
                        ", expected " + std::to_string(config.context_len) + "x" +
                        std::to_string(config.dim));
    }
  }
  return d;
}

data::FscilSplit protocol_split(const RunConfig& config, const ProtocolData& data) {
  data::SplitSpec spec;
  spec.base_classes = config.base_classes;
  spec.ways = config.ways;
  spec.shots = config.shots;
  spec.sessions = config.sessions;
  spec.seed = config.seed;
  return data::make_fscil_splits(data.train.labels(), data.test.labels(), spec);
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::size_t session) {
  return dir / ("session_" + std::to_string(session) + ".iosc");
}

std::vector<metrics::SessionReport> run_protocol(const RunConfig& config, ProtocolData& data,
                                                 const ProtocolHooks& hooks) {
  Learner learner(config);
  return continue_protocol(learner, {}, data, hooks);
}

std::vector<metrics::SessionReport> resume_protocol(const Checkpoint& checkpoint, ProtocolData& data,
                                                    const ProtocolHooks& hooks) {
  if (checkpoint.reports.size() != checkpoint.session_count()) {
    throw FormatError("checkpoint holds " + std::to_string(checkpoint.reports.size()) +
                      " reports for " + std::to_string(checkpoint.session_count()) + " sessions");
  }
  Learner learner = restore_learner(checkpoint);
  return continue_protocol(learner, checkpoint.reports, data, hooks);
}

metrics::SessionReport evaluate_checkpoint(const Checkpoint& checkpoint, const ProtocolData& data) {
  if (checkpoint.session_count() == 0) throw SetupError("checkpoint has no trained session");
  const data::FscilSplit split = protocol_split(checkpoint.config, data);
  const std::size_t t = checkpoint.session_count() - 1;
  if (t >= split.session_count()) throw SetupError("checkpoint has more sessions than the split");
  const Learner learner = restore_learner(checkpoint);
  metrics::SessionReport report = learner.evaluate(data.test, split.sessions[t].test);
  if (t < checkpoint.reports.size()) report.epoch_losses = checkpoint.reports[t].epoch_losses;
  return report;
}

void write_reports(const std::filesystem::path& dir, const std::vector<metrics::SessionReport>& reports) {
  using metrics::ReportFormat;
  metrics::emit_report(reports, dir / "report.json", ReportFormat::json);
  metrics::emit_report(reports, dir / "report.csv", ReportFormat::csv);
  metrics::emit_report(reports, dir / "plotdata.txt", ReportFormat::plotdata);
  for (const auto& r : reports) {
    data::write_text_file(dir / ("session_" + std::to_string(r.session) + ".json"),
                          metrics::to_json(r).dump(2) + "\n");
  }
}

Benchmark synthetic_benchmark(std::uint64_t seed) {
  data::SyntheticSpec spec;
  spec.classes = 10;
  spec.dim = 32;
  spec.sigma = 0.1;
  spec.seed = num::derive_seed(seed, "synthetic");
  const data::SyntheticDataset ds = data::gen_synthetic(spec);

  Benchmark b;
  b.config.dim = 32;
  b.config.seed = seed;
  b.config.tau = 16.0;
  b.config.base_classes = 6;
  b.config.ways = 2;
  b.config.shots = 5;
  b.config.sessions = 3;
  b.data.train = enc::ImageFeatureSource(ds.train);
  b.data.test = enc::ImageFeatureSource(ds.test);
  return b;
}

}  // namespace iosp::train
