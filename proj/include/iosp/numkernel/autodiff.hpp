#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iosp/numkernel/kernels.hpp"
#include "iosp/numkernel/tensor.hpp"

namespace iosp::num {

using ParamId = std::size_t;
using Gradients = std::map<ParamId, Tensor>;

// Named tensors that training may update. Ids are dense and stable.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value);

  const Tensor& value(ParamId id) const { return values_.at(id); }
  Tensor& value(ParamId id) { return values_.at(id); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  std::optional<ParamId> find(std::string_view name) const;
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, ParamId, std::less<>> index_;
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  bool tracks_grad() const;
  Tape* tape() const noexcept { return tape_; }
  std::size_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Reverse-mode recorder. Parameters outside the learnable set are bound as
// constants, so they never receive a gradient entry.
class Tape {
 public:
  // Receives the node's own output value and its accumulated gradient.
  using Backward = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  Tape() = default;
  explicit Tape(std::set<ParamId> learnable) : learnable_(std::move(learnable)) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Binding the same parameter twice returns the same node.
  Var bind(const ParameterStore& store, ParamId id);

  const Tensor& value(Var v) const { return nodes_.at(v.index()).value; }
  bool tracks_grad(Var v) const { return nodes_.at(v.index()).tracks_grad; }

  // Root must hold a single element; throws ContractError otherwise.
  void backward(Var root);

  // Gradient of every bound learnable parameter.
  Gradients parameter_grads() const;
  const std::set<ParamId>& learnable() const noexcept { return learnable_; }

  // For op implementations.
  Var record(Tensor value, bool tracks_grad, Backward backward);
  void accumulate(Var v, const Tensor& grad);
  void accumulate_at(Var v, std::size_t i, double g);
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool tracks_grad = false;
    Backward backward;
  };
  Tensor& grad_slot(std::size_t index);

  std::set<ParamId> learnable_;
  std::vector<Node> nodes_;
  std::unordered_map<ParamId, std::size_t> bound_;
};

// Differentiable ops. Inputs must live on the same tape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double factor);
Var matvec(Var w, Var x);  // (m x n) * (n) -> (m)
Var tanh(Var a);
Var relu(Var a);
Var mean_rows(Var m);  // (L x D) -> (D)
Var sum(Var a);        // -> scalar
Var cosine(Var a, Var b);
Var stack(std::span<const Var> scalars);
Var softmax(Var v);
Var pick(Var v, std::size_t i);
Var cross_entropy(Var probs, std::size_t target, WarningLog* warnings = nullptr);
Var weighted_sum(Var weights, std::span<const Var> tensors);
Var mean(std::span<const Var> scalars);

struct ValueAndGrad {
  double value = 0.0;
  Gradients grads;
};

// Runs `program` on a fresh tape and differentiates its scalar output with
// respect to `learnable`. Learnable parameters the program never reads get a
// zero gradient.
ValueAndGrad eval_with_gradients(const std::function<Var(Tape&)>& program,
                                 const ParameterStore& store, const std::set<ParamId>& learnable);

// Central differences, one coordinate at a time.
Gradients finite_diff_grad(const std::function<double(const ParameterStore&)>& fn,
                           const ParameterStore& store, const std::set<ParamId>& params,
                           double eps = 1e-5);

}  // namespace iosp::num
