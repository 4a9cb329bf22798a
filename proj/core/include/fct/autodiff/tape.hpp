#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fct/autodiff/param_store.hpp"
#include "fct/core/tensor.hpp"

namespace fct::ad {

class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const RealTensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Linear record of primitive applications. Each node stores its value and a
// closure that pushes the node's gradient into its inputs; backward() replays
// the closures in reverse order of recording, so every node's gradient is
// complete before its closure runs.
//
// A tape built with record_gradients=false keeps values only (inference).
class Tape {
 public:
  using Backward = std::function<void(Tape&, const RealTensor& out_grad)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(RealTensor value);
  Var input(RealTensor value);
  // Leaf that borrows the store's value; the store must outlive the tape.
  Var parameter(const ParamStore& store, const std::string& name);

  // Appends an op output. The node requires a gradient iff recording is on
  // and any input does; otherwise the closure is dropped.
  Var record(RealTensor value, std::initializer_list<Var> inputs, Backward backward);

  const RealTensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Adds g into v's gradient buffer; no-op if v does not require a gradient.
  void accumulate(Var v, const RealTensor& g);
  void accumulate(Var v, RealTensor&& g);

  // Seeds d(loss)/d(loss) = seed for a single-element loss.
  void backward(Var loss, double seed = 1.0);
  void backward(Var out, const RealTensor& out_grad);

  // Gradient of a node after backward(); zeros if the node was not reached.
  RealTensor grad(Var v) const;

  // A second backward() on the same tape throws unless replay is allowed
  // (test mode); a replay recomputes every gradient from scratch.
  void allow_replay(bool allowed) noexcept { replay_allowed_ = allowed; }

  // Parameter gradients in the store's sorted order; unreached parameters
  // and parameters never bound to this tape get zeros.
  GradientSet gradients(const ParamStore& store) const;

 private:
  struct Node {
    std::optional<RealTensor> owned;
    const RealTensor* borrowed = nullptr;
    std::optional<RealTensor> grad;
    Backward backward;
    bool requires_grad = false;

    const RealTensor& value() const { return borrowed ? *borrowed : *owned; }
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
  bool recording_;
  bool replay_allowed_ = false;
  bool backward_done_ = false;
};

}  // namespace fct::ad
