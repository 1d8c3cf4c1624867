#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "iosp/classify/classifier.hpp"
#include "iosp/datasets/embedding_file.hpp"
#include "iosp/encoders/image_features.hpp"
#include "iosp/encoders/text_encoder.hpp"
#include "iosp/metrics/report.hpp"
#include "iosp/numkernel/kernels.hpp"
#include "iosp/numkernel/rng.hpp"
#include "iosp/numkernel/sgd.hpp"
#include "iosp/promptmem/model.hpp"
#include "iosp/trainer/config.hpp"

namespace iosp::train {

// The samples one session may train on. Only these ids are ever read.
struct TrainView {
  const enc::ImageFeatureSource* source = nullptr;
  std::vector<std::size_t> ids;
};

struct SessionState {
  std::size_t session = 0;  // 0-based
  std::set<num::ParamId> learnable;
  // SHA-256 per frozen tensor (parameter name -> digest), encoder included.
  std::map<std::string, std::string> frozen_digests;
  std::vector<double> epoch_losses;  // mean sample loss per epoch
  std::vector<double> step_losses;   // mean batch loss per optimizer step
  num::WarningLog warnings;          // probability clamps in the loss
};

// Holds everything that persists across sessions: parameters, optimizer
// state, the frozen encoder and the shuffle generator.
class Learner {
 public:
  explicit Learner(RunConfig config);

  const RunConfig& config() const noexcept { return config_; }
  const pm::PromptModel& model() const noexcept { return model_; }
  pm::PromptModel& model() noexcept { return model_; }
  const enc::TextEncoder& encoder() const noexcept { return encoder_; }
  const num::SgdState& optimizer() const noexcept { return sgd_; }
  num::SgdState& optimizer() noexcept { return sgd_; }
  num::Rng& rng() noexcept { return rng_; }
  const num::Rng& rng() const noexcept { return rng_; }

  // Sessions whose class embeddings and pairs exist.
  std::size_t session_count() const noexcept { return model_.bank.session_count(); }

  // Initializes E^t for the new session and its key-prompt pairs. Creates the
  // key-map on the first call.
  void begin_session(std::span<const pm::ClassSpec> classes, const data::TokenFile* tokens = nullptr);

  SessionState train_base_session(const TrainView& data);
  // Requires |data| = ways * shots and a session of `ways` classes.
  SessionState train_incremental_session(const TrainView& data);

  // Parameters the newest session may update under the configured scope.
  std::set<num::ParamId> learnable_set() const;

  // Rounds every parameter and velocity to 32-bit precision, the resolution
  // checkpoints store, so that a resumed run matches an uninterrupted one.
  void canonicalize();

  // Gradients-off evaluation over every class seen so far.
  metrics::SessionReport evaluate(const enc::ImageFeatureSource& test,
                                  std::span<const std::size_t> ids) const;

  cls::ForwardOptions forward_options() const;
  std::map<std::string, std::string> digests(const std::set<num::ParamId>& exclude) const;

  // For checkpoint restore.
  static Learner restore(RunConfig config, pm::PromptModel model, num::SgdState sgd, num::Rng rng);

 private:
  SessionState run_session(const TrainView& data);

  RunConfig config_;
  enc::TextEncoder encoder_;
  pm::PromptModel model_;
  num::SgdState sgd_;
  num::Rng rng_;
};

}  // namespace iosp::train
