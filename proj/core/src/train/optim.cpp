#include "fct/train/optim.hpp"

#include <cmath>

namespace fct::train {

void adamw_update(ad::ParamStore& params, const AdamWOptions& o, double lr, std::size_t step) {
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (auto& [name, e] : params) {
    auto m = e.opt_state.try_emplace("m", e.value.shape()).first->second.data();
    auto v = e.opt_state.try_emplace("v", e.value.shape()).first->second.data();
    auto p = e.value.data();
    auto g = e.grad.data();
    const double decay = e.decay ? o.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * (mhat / (std::sqrt(vhat) + o.eps) + decay * p[i]);
    }
  }
}

double poly_lr(double base_lr, std::size_t t, std::size_t total, double power) {
  if (total == 0 || t >= total) return 0.0;
  return base_lr * std::pow(1.0 - static_cast<double>(t) / static_cast<double>(total), power);
}

}  // namespace fct::train
