#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "iosp/encoders/text_encoder.hpp"
#include "iosp/encoders/token_embedding.hpp"
#include "iosp/numkernel/autodiff.hpp"
#include "iosp/promptmem/model.hpp"
#include "iosp/promptmem/retrieval.hpp"

namespace iosp::cls {

// Textual classifiers conditioned on one image's bias; one (m_s x dim) matrix
// per session.
struct ClassifierSet {
  std::vector<num::Tensor> sessions;
  std::size_t class_count() const;
};

// g_i = encode(bias + E_i) for every class of sessions 0..through.
ClassifierSet gen_classifiers(const enc::TokenEmbedding& bias, const pm::ClassTokenBank& bank,
                              const num::ParameterStore& store, const enc::TextEncoder& encoder,
                              std::size_t through);

// softmax(tau * cos(feature, g)) over every classifier, session-ascending.
// Throws std::domain_error for a zero feature, std::invalid_argument for tau <= 0.
std::vector<double> class_logits(std::span<const double> feature, const ClassifierSet& classifiers,
                                 double tau);

struct ForwardOptions {
  double tau = 1.0;
  std::size_t top_k = 3;
  std::size_t through = 0;  // last seen session, 0-based
};

struct SampleGraph {
  num::Var probs;
  pm::TopKSelection selection;
};

// Builds the per-image computation on a tape:
// key -> top-K -> weights -> bias -> classifiers -> probabilities.
// The selection is a constant of the graph; pass `fixed` to reuse one.
class GraphBuilder {
 public:
  GraphBuilder(num::Tape& tape, const pm::PromptModel& model, const enc::TextEncoder& encoder,
               ForwardOptions options);

  SampleGraph probabilities(std::span<const double> feature,
                            const pm::TopKSelection* fixed = nullptr);
  // Cross-entropy on the true class; throws SetupError for an unseen label.
  num::Var loss(std::span<const double> feature, std::uint32_t label,
                const pm::TopKSelection* fixed = nullptr, num::WarningLog* warnings = nullptr);

 private:
  num::Tape& tape_;
  const pm::PromptModel& model_;
  const enc::TextEncoder& encoder_;
  ForwardOptions options_;
  enc::TextEncoder::Bound weights_;
};

double sample_loss(const pm::PromptModel& model, const enc::TextEncoder& encoder,
                   const ForwardOptions& options, std::span<const double> feature,
                   std::uint32_t label, const pm::TopKSelection* fixed = nullptr);

std::vector<double> predict_probs(const pm::PromptModel& model, const enc::TextEncoder& encoder,
                                  const ForwardOptions& options, std::span<const double> feature);

}  // namespace iosp::cls
