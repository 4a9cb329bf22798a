#include "fct/attention/normalizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fct/core/axis.hpp"

namespace fct::attention {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double magnitude(double v) { return std::isfinite(v) ? std::fabs(v) : kInf; }

// Per-fiber logmax state.
struct LogRow {
  std::vector<double> t;  // log(max(|x|, floor))
  double denom = 0.0;
  bool degenerate = false;
};

LogRow log_row(const RealTensor& x, const AxisLayout& f, std::size_t o, std::size_t i, const LogmaxPolicy& p) {
  LogRow r;
  r.t.resize(f.len);
  double total_abs = 0.0;
  for (std::size_t k = 0; k < f.len; ++k) {
    const double a = std::max(std::fabs(x[f.at(o, k, i)]), p.abs_floor);
    r.t[k] = std::log(a);
    r.denom += r.t[k];
    total_abs += std::fabs(r.t[k]);
  }
  r.degenerate = total_abs == 0.0 || std::fabs(r.denom) <= p.degenerate_ratio * total_abs;
  return r;
}

}  // namespace

std::string_view to_string(Normalizer n) {
  switch (n) {
    case Normalizer::logmax:
      return "logmax";
    case Normalizer::softmax:
      return "softmax";
    case Normalizer::identity:
      return "identity";
  }
  return "unknown";
}

Normalizer parse_normalizer(std::string_view name) {
  if (name == "logmax") return Normalizer::logmax;
  if (name == "softmax") return Normalizer::softmax;
  if (name == "identity") return Normalizer::identity;
  throw std::invalid_argument("unknown normalizer '" + std::string(name) + "'");
}

RealTensor softmax(const RealTensor& x, std::size_t axis) {
  const AxisLayout f(x.shape(), axis);
  RealTensor y(x.shape());
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      double m = -kInf;
      for (std::size_t k = 0; k < f.len; ++k) m = std::max(m, x[f.at(o, k, i)]);
      double s = 0.0;
      for (std::size_t k = 0; k < f.len; ++k) {
        const double e = std::exp(x[f.at(o, k, i)] - m);
        y[f.at(o, k, i)] = e;
        s += e;
      }
      for (std::size_t k = 0; k < f.len; ++k) y[f.at(o, k, i)] /= s;
    }
  }
  return y;
}

RealTensor softmax_backward(const RealTensor& y, const RealTensor& upstream, std::size_t axis) {
  if (!y.same_shape(upstream)) throw DimensionError("softmax_backward: upstream shape mismatch");
  const AxisLayout f(y.shape(), axis);
  RealTensor g(y.shape());
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < f.len; ++k) dot += y[f.at(o, k, i)] * upstream[f.at(o, k, i)];
      for (std::size_t k = 0; k < f.len; ++k) {
        const std::size_t idx = f.at(o, k, i);
        g[idx] = y[idx] * (upstream[idx] - dot);
      }
    }
  }
  return g;
}

RealTensor logmax(const RealTensor& x, std::size_t axis, const LogmaxPolicy& policy) {
  const AxisLayout f(x.shape(), axis);
  RealTensor y(x.shape());
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      const LogRow r = log_row(x, f, o, i, policy);
      for (std::size_t k = 0; k < f.len; ++k) {
        y[f.at(o, k, i)] = r.degenerate ? 1.0 / static_cast<double>(f.len) : r.t[k] / r.denom;
      }
    }
  }
  return y;
}

RealTensor logmax_grad(const RealTensor& x, const RealTensor& upstream, std::size_t axis,
                       const LogmaxPolicy& policy) {
  if (!x.same_shape(upstream)) throw DimensionError("logmax_grad: upstream shape mismatch");
  const AxisLayout f(x.shape(), axis);
  RealTensor g(x.shape());
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      const LogRow r = log_row(x, f, o, i, policy);
      if (r.degenerate) continue;
      double uy = 0.0;
      for (std::size_t k = 0; k < f.len; ++k) uy += upstream[f.at(o, k, i)] * (r.t[k] / r.denom);
      for (std::size_t k = 0; k < f.len; ++k) {
        const std::size_t idx = f.at(o, k, i);
        const double xv = x[idx];
        if (std::fabs(xv) <= policy.abs_floor) continue;
        g[idx] = (upstream[idx] - uy) / (r.denom * xv);
      }
    }
  }
  return g;
}

RealTensor softmax_jacobian(const RealTensor& row) {
  const RealTensor flat = row.reshaped({row.size()});
  const RealTensor y = softmax(flat, 0);
  const std::size_t n = y.size();
  RealTensor j({n, n});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) j.at(a, b) = y[a] * ((a == b ? 1.0 : 0.0) - y[b]);
  return j;
}

RealTensor logmax_jacobian(const RealTensor& row, const LogmaxPolicy& policy) {
  const RealTensor flat = row.reshaped({row.size()});
  const std::size_t n = flat.size();
  const AxisLayout f(flat.shape(), 0);
  const LogRow r = log_row(flat, f, 0, 0, policy);
  RealTensor j({n, n});
  if (r.degenerate) return j;
  const double d2 = r.denom * r.denom;
  for (std::size_t b = 0; b < n; ++b) {
    if (std::fabs(flat[b]) <= policy.abs_floor) continue;
    for (std::size_t a = 0; a < n; ++a) {
      j.at(a, b) = ((a == b ? r.denom : 0.0) - r.t[a]) / (flat[b] * d2);
    }
  }
  return j;
}

ChainStats softmax_chain_literal(const RealTensor& row) {
  const std::size_t n = row.size();
  std::vector<double> e(n);
  double c1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    e[k] = std::exp(row[k]);
    c1 += e[k];
  }
  const double c1sq = c1 * c1;
  ChainStats s;
  s.max_abs_term = magnitude(c1sq);
  double fro = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double numerator;
      if (a == b) {
        const double t1 = e[a] * c1;
        const double t2 = e[a] * e[a];
        s.max_abs_term = std::max({s.max_abs_term, magnitude(t1), magnitude(t2)});
        numerator = t1 - t2;
      } else {
        numerator = -e[a] * e[b];
        s.max_abs_term = std::max(s.max_abs_term, magnitude(numerator));
      }
      const double entry = numerator / c1sq;
      const double m = magnitude(entry);
      s.max_abs_entry = std::max(s.max_abs_entry, m);
      fro += m * m;
    }
  }
  s.jacobian_norm = std::sqrt(fro);
  s.finite = std::isfinite(s.max_abs_entry) && std::isfinite(s.max_abs_term);
  return s;
}

ChainStats logmax_chain(const RealTensor& row, const LogmaxPolicy& policy) {
  const RealTensor flat = row.reshaped({row.size()});
  const std::size_t n = flat.size();
  const AxisLayout f(flat.shape(), 0);
  const LogRow r = log_row(flat, f, 0, 0, policy);
  ChainStats s;
  const double d2 = r.denom * r.denom;
  double fro = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double numerator = (a == b ? r.denom : 0.0) - r.t[a];
      const double denominator = std::max(std::fabs(flat[b]), policy.abs_floor) * d2;
      s.max_abs_term = std::max({s.max_abs_term, magnitude(numerator), magnitude(denominator)});
      const double entry = r.degenerate ? 0.0 : numerator / denominator;
      const double m = magnitude(entry);
      s.max_abs_entry = std::max(s.max_abs_entry, m);
      fro += m * m;
    }
  }
  s.jacobian_norm = std::sqrt(fro);
  s.finite = std::isfinite(s.max_abs_entry) && std::isfinite(s.max_abs_term);
  return s;
}

}  // namespace fct::attention
