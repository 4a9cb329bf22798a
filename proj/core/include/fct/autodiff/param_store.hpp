#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fct/core/tensor.hpp"

namespace fct::ad {

struct ParamEntry {
  RealTensor value;
  RealTensor grad;
  // Optimizer moments keyed by role ("m", "v").
  std::map<std::string, RealTensor> opt_state;
  // Whether decoupled weight decay applies (matrices yes, gains/biases/alpha no).
  bool decay = true;
};

// Named learnable tensors. Iteration is in sorted name order, so every pass
// over the store (init, optimizer step, checkpoint) is deterministic.
class ParamStore {
 public:
  using Map = std::map<std::string, ParamEntry>;

  // Throws std::invalid_argument on a duplicate name.
  ParamEntry& add(const std::string& name, RealTensor value, bool decay = true);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  const RealTensor& value(const std::string& name) const { return at(name).value; }

  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  Map::iterator begin() { return entries_.begin(); }
  Map::iterator end() { return entries_.end(); }
  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

 private:
  Map entries_;
};

// Gradients for every parameter of a store, in the store's sorted order.
struct GradientSet {
  std::vector<RealTensor> grads;

  static GradientSet zeros_like(const ParamStore& store);
  void add_inplace(const GradientSet& other);
  void scale_inplace(double s);
  double l2_norm() const;
  bool all_finite() const;
};

// Pairwise (balanced binary tree) sum. The tree shape depends only on the
// number of inputs, so the result is independent of how the inputs were
// produced or scheduled.
GradientSet tree_reduce(std::vector<GradientSet> parts);

void store_gradients(ParamStore& store, const GradientSet& g);

}  // namespace fct::ad
