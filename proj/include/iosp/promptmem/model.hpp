#pragma once

#include "iosp/numkernel/autodiff.hpp"
#include "iosp/promptmem/class_bank.hpp"
#include "iosp/promptmem/key_prompt.hpp"
#include "iosp/promptmem/keymap.hpp"

namespace iosp::pm {

// Every learnable piece of the method: key-map weights, class-wise token
// embeddings and key-prompt pairs, all stored in one ParameterStore.
struct PromptModel {
  num::ParameterStore params;
  ClassTokenBank bank;
  PairTable pairs;
  KeyMap keymap;
};

}  // namespace iosp::pm
