#include "iosp/trainer/learner.hpp"

#include <cmath>

#include "iosp/errors.hpp"
#include "iosp/numkernel/digest.hpp"
#include "iosp/numkernel/kernels.hpp"

namespace iosp::train {

namespace {

constexpr const char* kEncoderDigestKey = "<text-encoder>";

pm::PairInitMode init_mode(PairInit init, std::size_t session) {
  switch (init) {
    case PairInit::embedding: return pm::PairInitMode::class_embedding;
    case PairInit::incremental_only:
      return session == 0 ? pm::PairInitMode::random : pm::PairInitMode::class_embedding;
    case PairInit::random: return pm::PairInitMode::random;
  }
  return pm::PairInitMode::class_embedding;
}

}  // namespace

Learner::Learner(RunConfig config)
    : config_(std::move(config)),
      encoder_(config_.dim, config_.context_len, config_.seed),
      sgd_(config_.sgd()),
      rng_(num::derive_seed(config_.seed, "shuffle")) {
  validate(config_);
}

Learner Learner::restore(RunConfig config, pm::PromptModel model, num::SgdState sgd, num::Rng rng) {
  Learner l(std::move(config));
  l.model_ = std::move(model);
  l.sgd_ = std::move(sgd);
  l.rng_ = rng;
  return l;
}

void Learner::begin_session(std::span<const pm::ClassSpec> classes, const data::TokenFile* tokens) {
  const std::size_t session = session_count();
  if (session == 0) {
    num::Rng keymap_rng(num::derive_seed(config_.seed, "keymap"));
    model_.keymap = pm::KeyMap::create(config_.keymap, config_.dim, model_.params, keymap_rng);
  }
  pm::init_class_embeddings(classes, num::derive_seed(config_.seed, "tokens"), config_.context_len,
                            config_.dim, model_.bank, model_.params, tokens);
  pm::init_key_prompt_pairs(config_.pairs_for(session), model_.bank, encoder_,
                            num::derive_seed(config_.seed, "pairs/s" + std::to_string(session)),
                            init_mode(config_.pair_init, session), model_.pairs, model_.params);
}

std::set<num::ParamId> Learner::learnable_set() const {
  if (session_count() == 0) throw SetupError("no session has been initialized");
  const std::size_t t = session_count() - 1;
  std::set<num::ParamId> out;
  if (t == 0 || config_.update_scope == UpdateScope::all_params) {
    for (num::ParamId id = 0; id < model_.params.size(); ++id) out.insert(id);
    return out;
  }
  for (const auto& e : model_.bank.session(t)) out.insert(e.embedding);
  for (const auto& p : model_.pairs.at(t)) {
    out.insert(p.key);
    out.insert(p.prompt);
  }
  if (config_.update_scope == UpdateScope::plus_keymap) {
    out.insert(model_.keymap.params().begin(), model_.keymap.params().end());
  }
  return out;
}

std::map<std::string, std::string> Learner::digests(const std::set<num::ParamId>& exclude) const {
  std::map<std::string, std::string> out;
  for (num::ParamId id = 0; id < model_.params.size(); ++id) {
    if (!exclude.count(id)) out.emplace(model_.params.name(id), num::sha256_hex(model_.params.value(id)));
  }
  out.emplace(kEncoderDigestKey, encoder_.digest());
  return out;
}

cls::ForwardOptions Learner::forward_options() const {
  cls::ForwardOptions o;
  o.tau = config_.tau;
  o.top_k = config_.top_k;
  o.through = session_count() == 0 ? 0 : session_count() - 1;
  return o;
}

SessionState Learner::train_base_session(const TrainView& data) {
  if (session_count() != 1) {
    throw SetupError("train_base_session: expected exactly the base session to be initialized");
  }
  return run_session(data);
}

SessionState Learner::train_incremental_session(const TrainView& data) {
  if (session_count() < 2) throw SetupError("train_incremental_session: no incremental session initialized");
  const std::size_t t = session_count() - 1;
  const std::size_t classes = model_.bank.session(t).size();
  if (classes != config_.ways) {
    throw SetupError("session " + std::to_string(t + 1) + " has " + std::to_string(classes) +
                     " classes, expected " + std::to_string(config_.ways) + " ways");
  }
  if (data.ids.size() != config_.ways * config_.shots) {
    throw SetupError("session " + std::to_string(t + 1) + " has " + std::to_string(data.ids.size()) +
                     " training samples, expected ways*shots = " +
                     std::to_string(config_.ways * config_.shots));
  }
  return run_session(data);
}

SessionState Learner::run_session(const TrainView& data) {
  if (data.source == nullptr || data.ids.empty()) throw SetupError("empty training set");
  const std::size_t t = session_count() - 1;
  for (std::size_t id : data.ids) {
    if (!model_.bank.flat_index(data.source->label(id), t)) {
      throw SetupError("training sample " + std::to_string(id) + " has an unseen label");
    }
  }

  SessionState state;
  state.session = t;
  state.learnable = learnable_set();
  state.frozen_digests = digests(state.learnable);

  const cls::ForwardOptions options = forward_options();
  const std::size_t epochs = config_.epochs_for(t);
  const std::size_t batch = config_.batch_size;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<std::size_t> order = data.ids;
    rng_.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const auto program = [&](num::Tape& tape) {
        cls::GraphBuilder builder(tape, model_, encoder_, options);
        std::vector<num::Var> losses;
        for (std::size_t i = start; i < end; ++i) {
          const std::size_t id = order[i];
          losses.push_back(builder.loss(data.source->feature(id), data.source->label(id), nullptr, &state.warnings));
        }
        return num::mean(losses);
      };
      const auto result = num::eval_with_gradients(program, model_.params, state.learnable);
      if (!std::isfinite(result.value)) {
        throw Error(ErrorCategory::internal, "non-finite training loss in session " + std::to_string(t + 1));
      }
      num::sgd_step(model_.params, result.grads, sgd_);
      state.step_losses.push_back(result.value);
      epoch_total += result.value * static_cast<double>(end - start);
    }
    state.epoch_losses.push_back(epoch_total / static_cast<double>(order.size()));
  }

  const auto after = digests(state.learnable);
  for (const auto& [name, digest] : state.frozen_digests) {
    auto it = after.find(name);
    if (it == after.end() || it->second != digest) {
      throw FreezeViolation("frozen tensor '" + name + "' changed during session " + std::to_string(t + 1));
    }
  }
  return state;
}

void Learner::canonicalize() {
  const auto round = [](num::Tensor& t) {
    for (double& x : t.values()) x = static_cast<double>(static_cast<float>(x));
  };
  for (num::ParamId id = 0; id < model_.params.size(); ++id) round(model_.params.value(id));
  for (auto& [_, v] : sgd_.velocities()) round(v);
}

metrics::SessionReport Learner::evaluate(const enc::ImageFeatureSource& test,
                                         std::span<const std::size_t> ids) const {
  if (session_count() == 0) throw SetupError("evaluate: no session has been trained");
  const cls::ForwardOptions options = forward_options();
  const auto classes = model_.bank.flattened(options.through);
  std::map<std::uint32_t, metrics::Count> per_class;
  metrics::SessionReport report;
  report.session = options.through + 1;
  report.config_digest = config_digest(config_);
  for (std::size_t id : ids) {
    const std::uint32_t truth = test.label(id);
    const auto owner = model_.bank.owner(truth);
    if (!owner || *owner > options.through) {
      throw SetupError("test sample " + std::to_string(id) + " belongs to an unseen class");
    }
    const auto probs = cls::predict_probs(model_, encoder_, options, test.feature(id));
    const bool hit = classes[num::argmax(probs)]->class_id == truth;
    report.all.add(hit);
    if (*owner == 0) {
      report.base.add(hit);
    } else {
      report.novel.add(hit);
    }
    per_class[truth].add(hit);
  }
  for (const auto& [id, count] : per_class) report.per_class.push_back({id, count});
  return report;
}

}  // namespace iosp::train
