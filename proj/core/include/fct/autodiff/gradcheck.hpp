#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fct/core/tensor.hpp"

namespace fct::ad {

struct FdOptions {
  // Coordinates to probe; empty means every coordinate.
  std::vector<std::size_t> coords;
  // Per-coordinate step h = step_scale * max(1, |x_i|).
  double step_scale = 1e-6;
  // Error denominators are floored at floor_fraction * (largest gradient
  // magnitude seen), so near-zero components are compared against the
  // gradient's own scale rather than against themselves.
  double floor_fraction = 1e-3;
  // One Richardson step on top of the central difference, which removes the
  // O(h^2) error term. Matters near stiff logmax rows with large curvature.
  bool richardson = true;
};

struct FdReport {
  double max_rel_err = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t checked = 0;
  // f was non-finite at some probe point; those coordinates are skipped.
  bool non_finite = false;
  bool passed = false;
  RealTensor numeric;  // finite-difference gradient (zeros where not probed)
};

using ScalarFn = std::function<double(const RealTensor&)>;

// Central differences D(h) = (f(x + h e_i) - f(x - h e_i)) / 2h, refined by
// Richardson extrapolation unless disabled, compared to an analytic gradient.
// err_i = |a_i - n_i| / max(|a_i|, |n_i|, floor, 1e-300).
FdReport finite_diff_check(const ScalarFn& f, const RealTensor& point, const RealTensor& analytic, double rel_tol,
                           const FdOptions& options = {});

// Numeric gradient only.
RealTensor finite_diff_gradient(const ScalarFn& f, const RealTensor& point, const FdOptions& options = {});

}  // namespace fct::ad
