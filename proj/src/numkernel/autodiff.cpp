#include "iosp/numkernel/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "iosp/errors.hpp"

namespace iosp::num {

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ContractError("duplicate parameter name " + name);
  const ParamId id = values_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return id;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Tensor& Var::value() const { return tape_->value(*this); }
bool Var::tracks_grad() const { return tape_->tracks_grad(*this); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::bind(const ParameterStore& store, ParamId id) {
  if (auto it = bound_.find(id); it != bound_.end()) return Var(this, it->second);
  const bool learnable = learnable_.count(id) > 0;
  Var v = record(store.value(id), learnable, nullptr);
  bound_.emplace(id, v.index());
  return v;
}

Var Tape::record(Tensor value, bool tracks_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.tracks_grad = tracks_grad;
  if (tracks_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t index) {
  Node& node = nodes_[index];
  if (node.grad.empty()) node.grad = Tensor(node.value.shape(), 0.0);
  return node.grad;
}

void Tape::accumulate(Var v, const Tensor& grad) {
  if (!nodes_[v.index()].tracks_grad) return;
  Tensor& slot = grad_slot(v.index());
  require_same_shape(slot, grad, "Tape::accumulate");
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += grad[i];
}

void Tape::accumulate_at(Var v, std::size_t i, double g) {
  if (!nodes_[v.index()].tracks_grad) return;
  grad_slot(v.index())[i] += g;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ContractError("backward: root belongs to another tape");
  if (nodes_[root.index()].value.size() != 1) {
    throw ContractError("backward: program output is not scalar (shape " +
                        nodes_[root.index()].value.shape_string() + ")");
  }
  if (!nodes_[root.index()].tracks_grad) return;
  grad_slot(root.index())[0] = 1.0;
  for (std::size_t i = root.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.tracks_grad || !node.backward || node.grad.empty()) continue;
    // The closure may append to other nodes' grads but never to this one.
    const Tensor out_grad = node.grad;
    node.backward(*this, node.value, out_grad);
  }
}

Gradients Tape::parameter_grads() const {
  Gradients out;
  for (const auto& [id, index] : bound_) {
    const Node& node = nodes_[index];
    if (!node.tracks_grad) continue;
    out.emplace(id, node.grad.empty() ? Tensor(node.value.shape(), 0.0) : node.grad);
  }
  return out;
}

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands on different tapes");
  }
  return *a.tape();
}

bool any_tracks(Var a, Var b) { return a.tracks_grad() || b.tracks_grad(); }

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape.record(std::move(out), any_tracks(a, b), [a, b](Tape& t, const Tensor&, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.record(std::move(out), any_tracks(a, b), [a, b](Tape& t, const Tensor&, const Tensor& g) {
    t.accumulate(a, g);
    if (b.tracks_grad()) {
      Tensor neg = g;
      for (double& x : neg.values()) x = -x;
      t.accumulate(b, neg);
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.record(std::move(out), any_tracks(a, b), [a, b](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      t.accumulate_at(a, i, g[i] * bv[i]);
      t.accumulate_at(b, i, g[i] * av[i]);
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& x : out.values()) x *= factor;
  return a.tape()->record(std::move(out), a.tracks_grad(), [a, factor](Tape& t, const Tensor&, const Tensor& g) {
    Tensor ga = g;
    for (double& x : ga.values()) x *= factor;
    t.accumulate(a, ga);
  });
}

Var matvec(Var w, Var x) {
  Tape& tape = same_tape(w, x, "matvec");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  if (wv.rank() != 2 || xv.rank() != 1 || wv.cols() != xv.size()) {
    throw ContractError("matvec: incompatible shapes " + wv.shape_string() + " and " +
                        xv.shape_string());
  }
  const std::size_t m = wv.rows();
  const std::size_t n = wv.cols();
  Tensor out({m}, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += wv[r * n + c] * xv[c];
    out[r] = s;
  }
  return tape.record(std::move(out), any_tracks(w, x), [w, x, m, n](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& wv = w.value();
    const Tensor& xv = x.value();
    if (w.tracks_grad()) {
      Tensor gw({m, n}, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) gw[r * n + c] = g[r] * xv[c];
      }
      t.accumulate(w, gw);
    }
    if (x.tracks_grad()) {
      Tensor gx({n}, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) gx[c] += wv[r * n + c] * g[r];
      }
      t.accumulate(x, gx);
    }
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& x : out.values()) x = std::tanh(x);
  return a.tape()->record(std::move(out), a.tracks_grad(),
                          [a](Tape& t, const Tensor& y, const Tensor& g) {
                            Tensor ga = g;
                            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - y[i] * y[i];
                            t.accumulate(a, ga);
                          });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
  return a.tape()->record(std::move(out), a.tracks_grad(), [a](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& av = a.value();
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (!(av[i] > 0.0)) ga[i] = 0.0;
    }
    t.accumulate(a, ga);
  });
}

Var mean_rows(Var m) {
  const Tensor& mv = m.value();
  if (mv.rank() != 2) throw ContractError("mean_rows: expected a matrix, got " + mv.shape_string());
  const std::size_t rows = mv.rows();
  const std::size_t cols = mv.cols();
  Tensor out({cols}, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += mv[r * cols + c];
  }
  for (double& x : out.values()) x /= static_cast<double>(rows);
  return m.tape()->record(std::move(out), m.tracks_grad(), [m, rows, cols](Tape& t, const Tensor&, const Tensor& g) {
    Tensor gm({rows, cols}, 0.0);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) gm[r * cols + c] = g[c] * inv;
    }
    t.accumulate(m, gm);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  return a.tape()->record(Tensor::scalar(s), a.tracks_grad(), [a](Tape& t, const Tensor&, const Tensor& g) {
    t.accumulate(a, Tensor(a.value().shape(), g[0]));
  });
}

Var cosine(Var a, Var b) {
  Tape& tape = same_tape(a, b, "cosine");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) throw ContractError("cosine: dimension mismatch");
  const double ab = dot(av.values(), bv.values());
  const double na = l2_norm(av.values());
  const double nb = l2_norm(bv.values());
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine: zero-norm input");
  const double c = ab / (na * nb);
  return tape.record(Tensor::scalar(c), any_tracks(a, b), [a, b, na, nb, c](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const double inv = 1.0 / (na * nb);
    for (std::size_t i = 0; i < av.size(); ++i) {
      t.accumulate_at(a, i, g[0] * (bv[i] * inv - c * av[i] / (na * na)));
      t.accumulate_at(b, i, g[0] * (av[i] * inv - c * bv[i] / (nb * nb)));
    }
  });
}

Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw ContractError("stack: no inputs");
  Tape& tape = *scalars.front().tape();
  std::vector<double> values;
  values.reserve(scalars.size());
  bool tracks = false;
  for (const Var& s : scalars) {
    if (s.tape() != &tape) throw ContractError("stack: operands on different tapes");
    values.push_back(s.value().item());
    tracks = tracks || s.tracks_grad();
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return tape.record(Tensor::vector(std::move(values)), tracks,
                     [inputs = std::move(inputs)](Tape& t, const Tensor&, const Tensor& g) {
                       for (std::size_t i = 0; i < inputs.size(); ++i) {
                         t.accumulate_at(inputs[i], 0, g[i]);
                       }
                     });
}

Var softmax(Var v) {
  Tensor out = Tensor::vector(softmax(v.value().values()));
  return v.tape()->record(std::move(out), v.tracks_grad(),
                          [v](Tape& t, const Tensor& p, const Tensor& g) {
                            double inner = 0.0;
                            for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * p[i];
                            Tensor gv = g;
                            for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = p[i] * (g[i] - inner);
                            t.accumulate(v, gv);
                          });
}

Var pick(Var v, std::size_t i) {
  const Tensor& vv = v.value();
  if (i >= vv.size()) throw std::out_of_range("pick: index out of range");
  return v.tape()->record(Tensor::scalar(vv[i]), v.tracks_grad(),
                          [v, i](Tape& t, const Tensor&, const Tensor& g) {
                            t.accumulate_at(v, i, g[0]);
                          });
}

Var cross_entropy(Var probs, std::size_t target, WarningLog* warnings) {
  const Tensor& p = probs.value();
  const double loss = cross_entropy(p.values(), target, warnings);
  const bool clamped = p[target] < kProbFloor;
  return probs.tape()->record(Tensor::scalar(loss), probs.tracks_grad(),
                              [probs, target, clamped](Tape& t, const Tensor&, const Tensor& g) {
                                if (clamped) return;  // constant in the clamped region
                                t.accumulate_at(probs, target, -g[0] / probs.value()[target]);
                              });
}

Var weighted_sum(Var weights, std::span<const Var> tensors) {
  const Tensor& w = weights.value();
  if (w.size() != tensors.size() || tensors.empty()) {
    throw ContractError("weighted_sum: " + std::to_string(w.size()) + " weights for " +
                        std::to_string(tensors.size()) + " tensors");
  }
  Tape& tape = *weights.tape();
  Tensor out(tensors.front().value().shape(), 0.0);
  bool tracks = weights.tracks_grad();
  for (std::size_t j = 0; j < tensors.size(); ++j) {
    if (tensors[j].tape() != &tape) throw ContractError("weighted_sum: operands on different tapes");
    const Tensor& m = tensors[j].value();
    require_same_shape(out, m, "weighted_sum");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * m[i];
    tracks = tracks || tensors[j].tracks_grad();
  }
  std::vector<Var> inputs(tensors.begin(), tensors.end());
  return tape.record(std::move(out), tracks,
                     [weights, inputs = std::move(inputs)](Tape& t, const Tensor&, const Tensor& g) {
                       const Tensor& w = weights.value();
                       for (std::size_t j = 0; j < inputs.size(); ++j) {
                         const Tensor& m = inputs[j].value();
                         if (weights.tracks_grad()) t.accumulate_at(weights, j, dot(g.values(), m.values()));
                         if (inputs[j].tracks_grad()) {
                           Tensor gm = g;
                           for (double& x : gm.values()) x *= w[j];
                           t.accumulate(inputs[j], gm);
                         }
                       }
                     });
}

Var mean(std::span<const Var> scalars) {
  if (scalars.empty()) throw ContractError("mean: no inputs");
  return scale(sum(stack(scalars)), 1.0 / static_cast<double>(scalars.size()));
}

ValueAndGrad eval_with_gradients(const std::function<Var(Tape&)>& program,
                                 const ParameterStore& store, const std::set<ParamId>& learnable) {
  Tape tape(learnable);
  const Var out = program(tape);
  if (out.tape() != &tape) throw ContractError("eval_with_gradients: program returned a foreign value");
  tape.backward(out);
  ValueAndGrad result;
  result.value = out.value().item();
  result.grads = tape.parameter_grads();
  for (ParamId id : learnable) {
    if (!result.grads.count(id)) result.grads.emplace(id, Tensor(store.value(id).shape(), 0.0));
  }
  return result;
}

Gradients finite_diff_grad(const std::function<double(const ParameterStore&)>& fn,
                           const ParameterStore& store, const std::set<ParamId>& params,
                           double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  ParameterStore probe = store;
  Gradients out;
  for (ParamId id : params) {
    Tensor grad(store.value(id).shape(), 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double original = store.value(id)[i];
      probe.value(id)[i] = original + eps;
      const double up = fn(probe);
      probe.value(id)[i] = original - eps;
      const double down = fn(probe);
      probe.value(id)[i] = original;
      grad[i] = (up - down) / (2.0 * eps);
    }
    out.emplace(id, std::move(grad));
  }
  return out;
}

}  // namespace iosp::num
