#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "iosp/datasets/binary_io.hpp"
#include "iosp/datasets/synthetic.hpp"
#include "iosp/errors.hpp"
#include "iosp/numkernel/digest.hpp"
#include "iosp/trainer/checkpoint.hpp"
#include "iosp/trainer/protocol.hpp"

using namespace iosp;
using train::RunConfig;

namespace {

// Classes on orthogonal axes with a little isotropic noise.
enc::ImageFeatureSource axis_source(std::uint32_t classes, std::uint32_t per_class, std::uint32_t dim,
                                    std::uint64_t seed) {
  data::EmbeddingSet set;
  set.dim = dim;
  num::Rng rng(seed);
  for (std::uint32_t c = 0; c < classes; ++c) {
    set.classes.push_back({c, "class_" + std::to_string(c)});
    for (std::uint32_t i = 0; i < per_class; ++i) {
      data::EmbeddingRecord r{c, std::vector<float>(dim)};
      for (std::uint32_t d = 0; d < dim; ++d) {
        r.feature[d] = static_cast<float>((d == c % dim ? 1.0 : 0.0) + 0.05 * rng.normal());
      }
      set.records.push_back(std::move(r));
    }
  }
  return enc::ImageFeatureSource(set);
}

std::vector<pm::ClassSpec> specs(std::uint32_t from, std::uint32_t to) {
  std::vector<pm::ClassSpec> out;
  for (std::uint32_t c = from; c < to; ++c) out.push_back({c, "class_" + std::to_string(c)});
  return out;
}

std::vector<std::size_t> ids_of(const enc::ImageFeatureSource& s, std::uint32_t from, std::uint32_t to,
                                std::size_t per_class = SIZE_MAX) {
  std::vector<std::size_t> out;
  std::map<std::uint32_t, std::size_t> taken;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = s.label(i);
    if (c >= from && c < to && taken[c]++ < per_class) out.push_back(i);
  }
  return out;
}

RunConfig small_config() {
  RunConfig c;
  c.dim = 8;
  c.context_len = 8;
  c.pairs_base = 4;
  c.pairs_inc = 2;
  c.top_k = 2;
  c.tau = 16.0;
  c.batch_size = 4;
  c.epochs_base = 3;
  c.epochs_inc = 3;
  c.base_classes = 3;
  c.ways = 2;
  c.shots = 3;
  c.sessions = 2;
  return c;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, num::Tensor> snapshot(const pm::PromptModel& m) {
  std::map<std::string, num::Tensor> out;
  for (num::ParamId id = 0; id < m.params.size(); ++id) out[m.params.name(id)] = m.params.value(id);
  return out;
}

}  // namespace

TEST_CASE("run config parsing") {
  CHECK(train::to_json(train::config_from_json(nlohmann::json::object())) == train::to_json(RunConfig{}));
  const RunConfig d;
  CHECK(d.epochs_base == 5);
  CHECK(d.epochs_inc == 3);
  CHECK(d.lr == 0.002);
  CHECK(d.momentum == 0.9);
  CHECK(d.weight_decay == 0.0005);
  CHECK(d.batch_size == 16);

  const auto key_of = [](const char* text) {
    try {
      train::config_from_json(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  CHECK(key_of(R"({"lr":"fast"})") == "lr");
  CHECK(key_of(R"({"learning_rate":0.1})") == "learning_rate");
  CHECK(key_of(R"({"top_k":-1})") == "top_k");
  CHECK(key_of(R"({"top_k":30})") == "top_k");
  CHECK(key_of(R"({"tau":0})") == "tau");
  CHECK(key_of(R"({"keymap":"fc9"})") == "keymap");
  CHECK(key_of(R"({"update_scope":"everything"})") == "update_scope");
  CHECK(key_of(R"({"momentum":1.0})") == "momentum");
  CHECK(key_of(R"({"keymap":"res2"})") == "<none>");

  RunConfig c = small_config();
  c.update_scope = train::UpdateScope::plus_keymap;
  c.pair_init = train::PairInit::incremental_only;
  c.train_path = "x";
  CHECK(train::to_json(train::config_from_json(train::to_json(c))) == train::to_json(c));
  CHECK(train::config_digest(c) == train::config_digest(train::config_from_json(train::to_json(c))));
  c.seed = 1;
  CHECK(train::config_digest(c) != train::config_digest(small_config()));
}

TEST_CASE("zero learning rate leaves every parameter untouched") {
  RunConfig c = small_config();
  c.lr = 0.0;
  auto src = axis_source(3, 6, 8, 1);
  train::Learner l(c);
  l.begin_session(specs(0, 3));
  const auto before = snapshot(l.model());
  const auto state = l.train_base_session({&src, ids_of(src, 0, 3)});
  CHECK(state.epoch_losses.size() == 3);
  CHECK(state.step_losses.size() == 3 * 5);  // 18 samples in batches of 4
  CHECK(snapshot(l.model()) == before);
}

TEST_CASE("zero epochs train nothing") {
  RunConfig c = small_config();
  c.epochs_base = 0;
  auto src = axis_source(3, 6, 8, 1);
  train::Learner l(c);
  l.begin_session(specs(0, 3));
  const auto before = snapshot(l.model());
  const auto state = l.train_base_session({&src, ids_of(src, 0, 3)});
  CHECK(state.epoch_losses.empty());
  CHECK(state.step_losses.empty());
  CHECK(snapshot(l.model()) == before);
}

TEST_CASE("training reduces the loss on separable data") {
  RunConfig c = small_config();
  c.epochs_base = 20;
  c.lr = 0.01;
  c.sessions = 1;
  auto src = axis_source(3, 10, 8, 2);
  train::Learner l(c);
  l.begin_session(specs(0, 3));
  const auto state = l.train_base_session({&src, ids_of(src, 0, 3)});
  REQUIRE(state.epoch_losses.size() == 20);
  CHECK(state.epoch_losses.back() < state.epoch_losses.front());
  CHECK(std::all_of(state.epoch_losses.begin(), state.epoch_losses.end(), [](double x) { return x >= 0.0; }));
}

TEST_CASE("underflowing probabilities are clamped and reported") {
  RunConfig c = small_config();
  c.tau = 1e5;
  c.sessions = 1;
  auto src = axis_source(3, 6, 8, 5);
  train::Learner l(c);
  l.begin_session(specs(0, 3));
  const auto state = l.train_base_session({&src, ids_of(src, 0, 3)});
  CHECK_FALSE(state.warnings.messages.empty());
  for (double x : state.epoch_losses) {
    CHECK(std::isfinite(x));
    CHECK(x <= -std::log(num::kProbFloor) + 1e-9);
  }
}

TEST_CASE("update scopes decide what an incremental session may change") {
  auto src = axis_source(5, 6, 8, 3);
  for (auto scope : {train::UpdateScope::current_only, train::UpdateScope::plus_keymap,
                     train::UpdateScope::all_params}) {
    RunConfig c = small_config();
    c.update_scope = scope;
    train::Learner l(c);
    l.begin_session(specs(0, 3));
    l.train_base_session({&src, ids_of(src, 0, 3)});
    l.begin_session(specs(3, 5));
    const auto learnable = l.learnable_set();
    const auto before = snapshot(l.model());
    const auto state = l.train_incremental_session({&src, ids_of(src, 3, 5, 3)});
    CHECK(state.learnable == learnable);
    const auto after = snapshot(l.model());

    const auto& m = l.model();
    for (num::ParamId id = 0; id < m.params.size(); ++id) {
      const std::string& name = m.params.name(id);
      const bool may_change = learnable.count(id) > 0;
      if (!may_change) {
        CHECK_MESSAGE(after.at(name) == before.at(name), name);
        CHECK(state.frozen_digests.count(name) == 1);
      }
    }
    CHECK(state.frozen_digests.count("<text-encoder>") == 1);

    const auto current = m.bank.session(1)[0].embedding;
    CHECK(learnable.count(current) == 1);
    CHECK(after.at(m.params.name(current)) != before.at(m.params.name(current)));
    const auto base_key = m.pairs[0][0].key;
    const auto km = m.keymap.params().front();
    CHECK((learnable.count(base_key) == 1) == (scope == train::UpdateScope::all_params));
    CHECK((learnable.count(km) == 1) == (scope != train::UpdateScope::current_only));
    if (scope == train::UpdateScope::all_params) {
      const auto base_e = m.bank.session(0)[0].embedding;
      CHECK(after.at(m.params.name(base_e)) != before.at(m.params.name(base_e)));
    }
  }
}

TEST_CASE("incremental sessions enforce the way and shot counts") {
  auto src = axis_source(6, 6, 8, 4);
  RunConfig c = small_config();
  train::Learner l(c);
  CHECK_THROWS_AS(l.train_base_session({&src, ids_of(src, 0, 3)}), SetupError);
  l.begin_session(specs(0, 3));
  CHECK_THROWS_AS(l.train_base_session({&src, {}}), SetupError);
  CHECK_THROWS_AS(l.train_base_session({&src, ids_of(src, 0, 4)}), SetupError);
  l.train_base_session({&src, ids_of(src, 0, 3)});
  CHECK_THROWS_AS(l.train_incremental_session({&src, ids_of(src, 3, 5, 3)}), SetupError);

  train::Learner wide(c);
  wide.begin_session(specs(0, 3));
  wide.train_base_session({&src, ids_of(src, 0, 3)});
  wide.begin_session(specs(3, 6));
  CHECK_THROWS_AS(wide.train_incremental_session({&src, ids_of(src, 3, 5, 3)}), SetupError);

  l.begin_session(specs(3, 5));
  CHECK_THROWS_AS(l.train_incremental_session({&src, ids_of(src, 3, 5, 2)}), SetupError);
  CHECK_THROWS_AS(l.train_incremental_session({&src, ids_of(src, 3, 5, 4)}), SetupError);
  CHECK_NOTHROW(l.train_incremental_session({&src, ids_of(src, 3, 5, 3)}));
}

TEST_CASE("checkpoint round trip and corruption") {
  auto b = train::synthetic_benchmark(5);
  b.config.sessions = 2;
  testutil::TempDir dir("ckpt");
  train::run_protocol(b.config, b.data, {dir.path(), std::nullopt, {}});
  const auto path = train::checkpoint_path(dir.path(), 2);
  const std::string bytes = read_file(path);

  const auto ckpt = train::load_checkpoint(path);
  CHECK(ckpt.session_count() == 2);
  CHECK(ckpt.reports.size() == 2);
  const auto again = train::encode_checkpoint(ckpt);
  CHECK(std::string(again.begin(), again.end()) == bytes);
  const auto restored = train::capture(train::restore_learner(ckpt), ckpt.reports);
  const auto third = train::encode_checkpoint(restored);
  CHECK(third == again);

  RunConfig other = b.config;
  other.dim = 16;
  CHECK_THROWS_AS(train::load_checkpoint(path, other), FormatError);
  CHECK_NOTHROW(train::load_checkpoint(path, b.config));

  const auto decode = [](std::string s) {
    return train::decode_checkpoint(
        std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()), "test");
  };
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(decode(bad), FormatError);
  CHECK_THROWS_AS(decode(bytes.substr(0, bytes.size() - 4)), FormatError);
  CHECK_THROWS_AS(decode(bytes + "x"), FormatError);
  CHECK_THROWS_AS(decode(bytes.substr(0, 10)), FormatError);
  bad = bytes;
  // Last f32 becomes NaN.
  bad[bad.size() - 1] = static_cast<char>(0x7f);
  bad[bad.size() - 2] = static_cast<char>(0xc0);
  CHECK_THROWS_AS(decode(bad), FormatError);
  CHECK_THROWS_AS(train::load_checkpoint(dir.path() / "absent.iosc"), FormatError);
}

TEST_CASE("resuming matches an uninterrupted run") {
  auto b = train::synthetic_benchmark(7);
  testutil::TempDir full("full"), part("part");
  const auto reference = train::run_protocol(b.config, b.data, {full.path(), std::nullopt, {}});
  REQUIRE(reference.size() == 3);

  const auto stopped = train::run_protocol(b.config, b.data, {part.path(), 1, {}});
  CHECK(stopped.size() == 1);
  CHECK_FALSE(std::filesystem::exists(train::checkpoint_path(part.path(), 2)));
  const auto resumed =
      train::resume_protocol(train::load_checkpoint(train::checkpoint_path(part.path(), 1)), b.data,
                             {part.path(), std::nullopt, {}});
  CHECK(resumed == reference);
  for (std::size_t t = 1; t <= 3; ++t) {
    CHECK(read_file(train::checkpoint_path(part.path(), t)) == read_file(train::checkpoint_path(full.path(), t)));
  }

  const auto ckpt = train::load_checkpoint(train::checkpoint_path(full.path(), 3));
  CHECK(train::evaluate_checkpoint(ckpt, b.data) == reference.back());
}

TEST_CASE("runs are deterministic") {
  auto b1 = train::synthetic_benchmark(3);
  auto b2 = train::synthetic_benchmark(3);
  testutil::TempDir a("det-a"), c("det-b");
  const auto r1 = train::run_protocol(b1.config, b1.data, {a.path(), std::nullopt, {}});
  const auto r2 = train::run_protocol(b2.config, b2.data, {c.path(), std::nullopt, {}});
  CHECK(r1 == r2);
  train::write_reports(a.path() / "reports", r1);
  train::write_reports(c.path() / "reports", r2);
  for (const char* f : {"report.json", "report.csv", "plotdata.txt", "session_3.json"}) {
    CHECK(read_file(a.path() / "reports" / f) == read_file(c.path() / "reports" / f));
  }
  CHECK(read_file(train::checkpoint_path(a.path(), 3)) == read_file(train::checkpoint_path(c.path(), 3)));

  auto b3 = train::synthetic_benchmark(4);
  CHECK(train::run_protocol(b3.config, b3.data) != r1);
}

TEST_CASE("a session only reads its own training samples") {
  auto b = train::synthetic_benchmark(9);
  const auto split = train::protocol_split(b.config, b.data);
  std::size_t current = 0;
  std::vector<std::set<std::size_t>> reads(3);
  b.data.train.set_observer([&](std::size_t id) { reads[current].insert(id); });
  train::ProtocolHooks hooks;
  hooks.on_session_begin = [&](std::size_t t) { current = t; };
  train::run_protocol(b.config, b.data, hooks);
  for (std::size_t t = 0; t < 3; ++t) {
    const std::set<std::size_t> allowed(split.sessions[t].train.begin(), split.sessions[t].train.end());
    CHECK(reads[t] == allowed);
  }
  CHECK(reads[1].size() == 10);
}

TEST_CASE("a single-session run has no novel accuracy") {
  auto b = train::synthetic_benchmark(1);
  b.config.sessions = 1;
  const auto reports = train::run_protocol(b.config, b.data);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].novel.total == 0);
  CHECK(reports[0].all == reports[0].base);
  CHECK(reports[0].session == 1);
  CHECK(reports[0].config_digest == train::config_digest(b.config));
  CHECK(metrics::summary_json(reports)["NLA"].is_null());
}

TEST_CASE("missing or mismatched protocol data") {
  RunConfig c = small_config();
  CHECK_THROWS_AS(train::load_protocol_data(c), ConfigError);
  testutil::TempDir dir("proto");
  data::SyntheticSpec spec;
  spec.classes = 4;
  spec.dim = 6;
  data::write_synthetic(data::gen_synthetic(spec), dir.path());
  c.train_path = (dir.path() / "train").string();
  c.test_path = (dir.path() / "test").string();
  try {
    train::load_protocol_data(c);
    FAIL("expected a dim error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "dim");
  }
  c.dim = 6;
  CHECK(train::load_protocol_data(c).train.size() == 4 * spec.train_per_class);
  c.test_path = (dir.path() / "nowhere").string();
  CHECK_THROWS_AS(train::load_protocol_data(c), FormatError);
}
