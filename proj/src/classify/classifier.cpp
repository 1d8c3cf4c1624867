#include "iosp/classify/classifier.hpp"

#include <stdexcept>

#include "iosp/errors.hpp"
#include "iosp/numkernel/kernels.hpp"

namespace iosp::cls {

std::size_t ClassifierSet::class_count() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.rows();
  return n;
}

ClassifierSet gen_classifiers(const enc::TokenEmbedding& bias, const pm::ClassTokenBank& bank,
                              const num::ParameterStore& store, const enc::TextEncoder& encoder,
                              std::size_t through) {
  if (bank.session_count() == 0) throw SetupError("gen_classifiers: empty class bank");
  if (through >= bank.session_count()) {
    throw SetupError("gen_classifiers: bank has no session " + std::to_string(through));
  }
  num::Tape tape;
  const auto weights = encoder.bind(tape);
  const num::Var b = tape.constant(bias.matrix);
  ClassifierSet out;
  for (std::size_t s = 0; s <= through; ++s) {
    const auto& entries = bank.session(s);
    num::Tensor mat = num::Tensor::matrix(entries.size(), encoder.dim());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const num::Var e = tape.bind(store, entries[i].embedding);
      const num::Tensor g = encoder.encode(weights, num::add(b, e)).value();
      std::copy(g.values().begin(), g.values().end(), mat.row(i).begin());
    }
    out.sessions.push_back(std::move(mat));
  }
  return out;
}

std::vector<double> class_logits(std::span<const double> feature, const ClassifierSet& classifiers,
                                 double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("class_logits: tau must be positive");
  if (num::l2_norm(feature) == 0.0) throw std::domain_error("class_logits: zero feature");
  std::vector<double> scores;
  for (const auto& mat : classifiers.sessions) {
    for (std::size_t i = 0; i < mat.rows(); ++i) scores.push_back(tau * num::cosine_sim(feature, mat.row(i)));
  }
  return num::softmax(scores);
}

GraphBuilder::GraphBuilder(num::Tape& tape, const pm::PromptModel& model,
                           const enc::TextEncoder& encoder, ForwardOptions options)
    : tape_(tape), model_(model), encoder_(encoder), options_(options), weights_(encoder.bind(tape)) {
  if (!(options_.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (model_.bank.session_count() <= options_.through) {
    throw SetupError("class bank not populated through session " + std::to_string(options_.through));
  }
}

SampleGraph GraphBuilder::probabilities(std::span<const double> feature,
                                        const pm::TopKSelection* fixed) {
  const auto& store = model_.params;
  if (num::l2_norm(feature) == 0.0) throw std::domain_error("zero image feature");
  const num::Var f = tape_.constant(num::Tensor::vector({feature.begin(), feature.end()}));
  const num::Var image_key = model_.keymap.apply(tape_, store, f);

  SampleGraph out;
  if (fixed) {
    out.selection = *fixed;
  } else {
    const auto sims = pm::key_similarities(image_key.value().values(), model_.pairs, store,
                                           options_.through);
    out.selection = pm::topk_2d(sims, options_.top_k);
  }

  std::vector<num::Var> sims;
  std::vector<num::Var> prompts;
  for (const auto& sel : out.selection) {
    const auto& pair = model_.pairs.at(sel.session).at(sel.index);
    sims.push_back(num::cosine(image_key, tape_.bind(store, pair.key)));
    prompts.push_back(tape_.bind(store, pair.prompt));
  }
  const num::Var weights = num::softmax(num::stack(sims));
  const num::Var bias = num::weighted_sum(weights, prompts);

  std::vector<num::Var> logits;
  for (const pm::ClassEntry* entry : model_.bank.flattened(options_.through)) {
    const num::Var e = tape_.bind(store, entry->embedding);
    const num::Var g = encoder_.encode(weights_, num::add(bias, e));
    logits.push_back(num::scale(num::cosine(f, g), options_.tau));
  }
  out.probs = num::softmax(num::stack(logits));
  return out;
}

num::Var GraphBuilder::loss(std::span<const double> feature, std::uint32_t label,
                            const pm::TopKSelection* fixed, num::WarningLog* warnings) {
  const auto target = model_.bank.flat_index(label, options_.through);
  if (!target) throw SetupError("label " + std::to_string(label) + " is not a seen class");
  return num::cross_entropy(probabilities(feature, fixed).probs, *target, warnings);
}

double sample_loss(const pm::PromptModel& model, const enc::TextEncoder& encoder,
                   const ForwardOptions& options, std::span<const double> feature,
                   std::uint32_t label, const pm::TopKSelection* fixed) {
  num::Tape tape;
  GraphBuilder builder(tape, model, encoder, options);
  return builder.loss(feature, label, fixed).value().item();
}

std::vector<double> predict_probs(const pm::PromptModel& model, const enc::TextEncoder& encoder,
                                  const ForwardOptions& options, std::span<const double> feature) {
  num::Tape tape;
  GraphBuilder builder(tape, model, encoder, options);
  const auto& p = builder.probabilities(feature).probs.value();
  return {p.values().begin(), p.values().end()};
}

}  // namespace iosp::cls
