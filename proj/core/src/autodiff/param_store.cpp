#include "fct/autodiff/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace fct::ad {

ParamEntry& ParamStore::add(const std::string& name, RealTensor value, bool decay) {
  if (entries_.count(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  ParamEntry e;
  e.grad = RealTensor(value.shape());
  e.value = std::move(value);
  e.decay = decay;
  return entries_.emplace(name, std::move(e)).first->second;
}

ParamEntry& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const ParamEntry& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.grad = RealTensor(e.value.shape());
}

GradientSet GradientSet::zeros_like(const ParamStore& store) {
  GradientSet g;
  g.grads.reserve(store.size());
  for (const auto& [_, e] : store) g.grads.emplace_back(e.value.shape());
  return g;
}

void GradientSet::add_inplace(const GradientSet& other) {
  if (other.grads.size() != grads.size()) throw DimensionError("GradientSet: parameter count mismatch");
  for (std::size_t p = 0; p < grads.size(); ++p) {
    auto dst = grads[p].data();
    auto src = other.grads[p].data();
    if (dst.size() != src.size()) throw DimensionError("GradientSet: tensor size mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

void GradientSet::scale_inplace(double s) {
  for (auto& g : grads)
    for (auto& v : g.data()) v *= s;
}

double GradientSet::l2_norm() const {
  double s = 0.0;
  for (const auto& g : grads)
    for (double v : g.data()) s += v * v;
  return std::sqrt(s);
}

bool GradientSet::all_finite() const {
  for (const auto& g : grads)
    if (!fct::all_finite(g)) return false;
  return true;
}

GradientSet tree_reduce(std::vector<GradientSet> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::vector<GradientSet> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      parts[i].add_inplace(parts[i + 1]);
      next.push_back(std::move(parts[i]));
    }
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

void store_gradients(ParamStore& store, const GradientSet& g) {
  if (g.grads.size() != store.size()) throw DimensionError("store_gradients: parameter count mismatch");
  std::size_t p = 0;
  for (auto& [_, e] : store) e.grad = g.grads[p++];
}

}  // namespace fct::ad
