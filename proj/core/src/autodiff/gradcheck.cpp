#include "fct/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fct::ad {

namespace {

std::vector<std::size_t> probe_coords(const RealTensor& point, const FdOptions& options) {
  if (!options.coords.empty()) return options.coords;
  std::vector<std::size_t> all(point.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

}  // namespace

RealTensor finite_diff_gradient(const ScalarFn& f, const RealTensor& point, const FdOptions& options) {
  RealTensor numeric(point.shape());
  RealTensor probe = point;
  for (std::size_t i : probe_coords(point, options)) {
    const double x = point[i];
    const double h = options.step_scale * std::max(1.0, std::fabs(x));
    auto central = [&](double step) {
      probe[i] = x + step;
      const double up = f(probe);
      probe[i] = x - step;
      const double down = f(probe);
      probe[i] = x;
      return (up - down) / (2.0 * step);
    };
    const double d_h = central(h);
    // The h^2 error terms of D(h) and D(h/2) cancel in (4 D(h/2) - D(h)) / 3.
    numeric[i] = options.richardson ? (4.0 * central(0.5 * h) - d_h) / 3.0 : d_h;
  }
  return numeric;
}

FdReport finite_diff_check(const ScalarFn& f, const RealTensor& point, const RealTensor& analytic, double rel_tol,
                           const FdOptions& options) {
  if (!analytic.same_shape(point)) throw DimensionError("finite_diff_check: gradient shape differs from point");
  FdReport report;
  report.numeric = finite_diff_gradient(f, point, options);
  const auto coords = probe_coords(point, options);
  double scale = 0.0;
  for (std::size_t i : coords) {
    if (!std::isfinite(report.numeric[i])) {
      report.non_finite = true;
      continue;
    }
    scale = std::max({scale, std::fabs(analytic[i]), std::fabs(report.numeric[i])});
  }
  const double floor = options.floor_fraction * scale;
  for (std::size_t i : coords) {
    const double n = report.numeric[i];
    if (!std::isfinite(n)) continue;
    const double a = analytic[i];
    const double denom = std::max({std::fabs(a), std::fabs(n), floor, 1e-300});
    const double err = std::fabs(a - n) / denom;
    ++report.checked;
    if (err > report.max_rel_err || !std::isfinite(err)) {
      report.max_rel_err = std::isfinite(err) ? err : INFINITY;
      report.worst_coord = i;
      report.analytic_at_worst = a;
      report.numeric_at_worst = n;
    }
  }
  report.passed = !report.non_finite && report.max_rel_err <= rel_tol;
  return report;
}

}  // namespace fct::ad
