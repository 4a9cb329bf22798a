#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "fct/core/tensor.hpp"

namespace fct::attention {

enum class Normalizer { logmax, softmax, identity };

std::string_view to_string(Normalizer n);
// Accepts "logmax", "softmax", "identity"; throws std::invalid_argument otherwise.
Normalizer parse_normalizer(std::string_view name);

// Totalising constants for Logmax. A magnitude below `abs_floor` is clamped
// before the log. A row whose log-sum D satisfies |D| <= degenerate_ratio *
// sum|log|x_j|| (or whose logs are all zero) has no meaningful ratio and maps
// to the uniform distribution with zero gradient.
struct LogmaxPolicy {
  double abs_floor = 1e-12;
  double degenerate_ratio = 1e-6;
};

// exp(x - max) / sum exp(x - max) along `axis`.
RealTensor softmax(const RealTensor& x, std::size_t axis);
// Vector-Jacobian product given the softmax output y.
RealTensor softmax_backward(const RealTensor& y, const RealTensor& upstream, std::size_t axis);

// log|x_i| / sum_j log|x_j| along `axis`, with the LogmaxPolicy applied.
RealTensor logmax(const RealTensor& x, std::size_t axis, const LogmaxPolicy& policy = {});
// Vector-Jacobian product of logmax at x:
//   dL/dx_j = (1/x_j) (u_j - sum_i u_i y_i) / D
// which is the transpose of dy_i/dx_j = (delta_ij D - log|x_i|) / (x_j D^2).
// Clamped entries and degenerate rows contribute zero.
RealTensor logmax_grad(const RealTensor& x, const RealTensor& upstream, std::size_t axis,
                       const LogmaxPolicy& policy = {});

// Dense Jacobians of a single row, for analysis and tests.
RealTensor softmax_jacobian(const RealTensor& row);
RealTensor logmax_jacobian(const RealTensor& row, const LogmaxPolicy& policy = {});

// Magnitudes met while evaluating a normaliser's derivative exactly as the
// closed form is written: for softmax, exp(x_i) C1 - exp(x_i)^2 over C1^2
// with no max subtraction; for logmax, (C2 - log|x_i|) over |x_j| C2^2.
// Non-finite values count as +infinity.
struct ChainStats {
  double max_abs_entry = 0.0;    // largest |dy_i/dx_j|
  double max_abs_term = 0.0;     // largest numerator/denominator term
  double jacobian_norm = 0.0;    // Frobenius norm, +inf when any entry is non-finite
  bool finite = true;
};

ChainStats softmax_chain_literal(const RealTensor& row);
ChainStats logmax_chain(const RealTensor& row, const LogmaxPolicy& policy = {});

}  // namespace fct::attention
