#include "fct/autodiff/tape.hpp"

#include <stdexcept>

namespace fct::ad {

const RealTensor& Var::value() const {
  if (!tape_) throw std::logic_error("value() on an unbound Var");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(RealTensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::input(RealTensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = recording_;
  return push(std::move(n));
}

Var Tape::parameter(const ParamStore& store, const std::string& name) {
  if (auto it = params_.find(name); it != params_.end()) return Var(this, it->second);
  Node n;
  n.borrowed = &store.at(name).value;
  n.requires_grad = recording_;
  Var v = push(std::move(n));
  params_.emplace(name, v.id());
  return v;
}

Var Tape::record(RealTensor value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.owned = std::move(value);
  if (recording_) {
    for (const Var& in : inputs) {
      if (in.tape_ != this) throw std::logic_error("Tape::record: input belongs to another tape");
      if (nodes_[in.id_].requires_grad) n.requires_grad = true;
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const RealTensor& Tape::value(Var v) const { return nodes_.at(v.id()).value(); }

void Tape::accumulate(Var v, const RealTensor& g) {
  Node& n = nodes_.at(v.id());
  if (!n.requires_grad) return;
  if (!n.grad) {
    if (!g.same_shape(n.value())) {
      throw DimensionError("gradient shape " + shape_to_string(g.shape()) + " does not match value shape " +
                           shape_to_string(n.value().shape()));
    }
    n.grad = g;
    return;
  }
  auto dst = n.grad->data();
  auto src = g.data();
  if (dst.size() != src.size()) throw DimensionError("gradient accumulation size mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::accumulate(Var v, RealTensor&& g) {
  Node& n = nodes_.at(v.id());
  if (!n.requires_grad) return;
  if (!n.grad && g.same_shape(n.value())) {
    n.grad = std::move(g);
    return;
  }
  accumulate(v, static_cast<const RealTensor&>(g));
}

void Tape::backward(Var loss, double seed) {
  if (value(loss).size() != 1) {
    throw DimensionError("backward: loss must be a single value, got shape " + shape_to_string(value(loss).shape()));
  }
  backward(loss, RealTensor::filled(value(loss).shape(), seed));
}

void Tape::backward(Var out, const RealTensor& out_grad) {
  if (!recording_) throw std::logic_error("backward on a tape that records no gradients");
  if (backward_done_ && !replay_allowed_) {
    throw std::logic_error("backward already ran on this tape; double backward is not supported");
  }
  for (auto& n : nodes_) n.grad.reset();
  backward_done_ = true;
  accumulate(out, out_grad);
  for (std::size_t id = out.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.grad || !n.backward) continue;
    // The closure only touches nodes recorded before this one.
    const RealTensor& g = *n.grad;
    n.backward(*this, g);
  }
}

RealTensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad) return *n.grad;
  return RealTensor(n.value().shape());
}

GradientSet Tape::gradients(const ParamStore& store) const {
  GradientSet g;
  g.grads.reserve(store.size());
  for (const auto& [name, entry] : store) {
    auto it = params_.find(name);
    if (it != params_.end() && nodes_[it->second].grad) {
      g.grads.push_back(*nodes_[it->second].grad);
    } else {
      g.grads.emplace_back(entry.value.shape());
    }
  }
  return g;
}

}  // namespace fct::ad
