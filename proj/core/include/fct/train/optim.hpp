#pragma once

#include <cstddef>

#include "fct/autodiff/param_store.hpp"

namespace fct::train {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled-weight-decay Adam over a ParamStore. Moments live in each
// entry's opt_state ("m", "v"); `step` is 1-based and drives bias correction.
// Decay applies only to entries flagged for it.
void adamw_update(ad::ParamStore& params, const AdamWOptions& options, double lr, std::size_t step);

// Polynomial decay to zero: base_lr * (1 - t / total)^power for t in [0, total).
double poly_lr(double base_lr, std::size_t t, std::size_t total, double power = 0.9);

}  // namespace fct::train
