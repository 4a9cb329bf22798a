#include "fct/spectral/dft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace fct::spectral {

namespace {

struct FiberLayout {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;

  std::size_t index(std::size_t o, std::size_t k, std::size_t i, std::size_t axis_len) const {
    return (o * axis_len + k) * inner + i;
  }
};

FiberLayout layout_of(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape));
  }
  FiberLayout f;
  for (std::size_t a = 0; a < axis; ++a) f.outer *= shape[a];
  f.len = shape[axis];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) f.inner *= shape[a];
  return f;
}

Shape with_axis(Shape shape, std::size_t axis, std::size_t len) {
  shape[axis] = len;
  return shape;
}

// Bin weight in the real synthesis sum: DC and Nyquist appear once in the full
// spectrum, interior bins twice (k and N-k).
double bin_weight(std::size_t k, std::size_t n) {
  if (k == 0) return 1.0;
  if (n % 2 == 0 && k == n / 2) return 1.0;
  return 2.0;
}

// Angle tables for exact index reduction in the direct sums.
struct AngleTable {
  std::vector<double> c;
  std::vector<double> s;
  explicit AngleTable(std::size_t n) : c(n), s(n) {
    for (std::size_t m = 0; m < n; ++m) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
      c[m] = std::cos(a);
      s[m] = std::sin(a);
    }
  }
};

// Forward transform of one fiber into half-spectrum bins.
void forward_fiber(const std::vector<double>& x, std::vector<double>& out_re, std::vector<double>& out_im,
                   bool allow_fast) {
  const std::size_t n = x.size();
  const std::size_t l = half_length(n);
  out_re.assign(l, 0.0);
  out_im.assign(l, 0.0);
  if (allow_fast && is_power_of_two(n)) {
    std::vector<double> re(x), im(n, 0.0);
    plan_for(n)->execute(re.data(), im.data(), false);
    for (std::size_t k = 0; k < l; ++k) {
      out_re[k] = re[k];
      out_im[k] = im[k];
    }
  } else {
    const AngleTable t(n);
    for (std::size_t k = 0; k < l; ++k) {
      double sr = 0.0, si = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t m = (k * j) % n;
        sr += x[j] * t.c[m];
        si -= x[j] * t.s[m];
      }
      out_re[k] = sr;
      out_im[k] = si;
    }
  }
  out_im[0] = 0.0;
  if (n % 2 == 0) out_im[n / 2] = 0.0;
}

// Real synthesis (1/N) sum_k w_k (re_k cos - im_k sin) of one fiber.
void synthesize_fiber(const std::vector<double>& bre, const std::vector<double>& bim, std::size_t n,
                      std::vector<double>& out) {
  const std::size_t l = half_length(n);
  out.assign(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  if (is_power_of_two(n)) {
    std::vector<double> re(n, 0.0), im(n, 0.0);
    re[0] = bre[0];
    for (std::size_t k = 1; k < l; ++k) {
      re[k] = bre[k];
      im[k] = bim[k];
      if (n - k != k) {
        re[n - k] = bre[k];
        im[n - k] = -bim[k];
      }
    }
    if (n % 2 == 0) im[n / 2] = 0.0;
    plan_for(n)->execute(re.data(), im.data(), true);
    for (std::size_t j = 0; j < n; ++j) out[j] = re[j] * inv_n;
  } else {
    const AngleTable t(n);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < l; ++k) {
        const std::size_t m = (k * j) % n;
        acc += bin_weight(k, n) * (bre[k] * t.c[m] - bim[k] * t.s[m]);
      }
      out[j] = acc * inv_n;
    }
  }
}

HalfSpectrum forward(const RealTensor& x, std::size_t axis, bool allow_fast) {
  const FiberLayout f = layout_of(x.shape(), axis);
  if (f.len < 2) throw SizeError("dft: transform length must be at least 2, got " + std::to_string(f.len));
  const std::size_t l = half_length(f.len);
  ComplexTensor bins(with_axis(x.shape(), axis, l));
  std::vector<double> fiber(f.len), re, im;
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      for (std::size_t k = 0; k < f.len; ++k) fiber[k] = x[f.index(o, k, i, f.len)];
      forward_fiber(fiber, re, im, allow_fast);
      for (std::size_t k = 0; k < l; ++k) {
        bins.re[f.index(o, k, i, l)] = re[k];
        bins.im[f.index(o, k, i, l)] = im[k];
      }
    }
  }
  return HalfSpectrum{std::move(bins), f.len, axis};
}

}  // namespace

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t n) : n_(n), bitrev_(n), cos_(n / 2), sin_(n / 2) {
  if (!is_power_of_two(n)) throw SizeError("FftPlan: length " + std::to_string(n) + " is not a power of two");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  for (std::size_t m = 0; m < n / 2; ++m) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    cos_[m] = std::cos(a);
    sin_[m] = std::sin(a);
  }
}

void FftPlan::execute(double* re, double* im, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t r = bitrev_[i];
    if (i < r) {
      std::swap(re[i], re[r]);
      std::swap(im[i], im[r]);
    }
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = cos_[j * step];
        const double wi = sign * sin_[j * step];
        const std::size_t a = start + j;
        const std::size_t b = a + half;
        const double vr = re[b] * wr - im[b] * wi;
        const double vi = re[b] * wi + im[b] * wr;
        re[b] = re[a] - vr;
        im[b] = im[a] - vi;
        re[a] += vr;
        im[a] += vi;
      }
    }
  }
}

std::shared_ptr<const FftPlan> plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const FftPlan>(n);
  return slot;
}

HalfSpectrum dft(const RealTensor& x, std::size_t axis) { return forward(x, axis, true); }

HalfSpectrum dft_naive(const RealTensor& x, std::size_t axis) { return forward(x, axis, false); }

RealTensor synthesize(const ComplexTensor& bins, std::size_t n, std::size_t axis) {
  const FiberLayout f = layout_of(bins.shape(), axis);
  if (n < 2) throw SizeError("idft: signal length must be at least 2, got " + std::to_string(n));
  if (f.len != half_length(n)) {
    throw DimensionError("idft: " + std::to_string(f.len) + " bins cannot describe a length-" + std::to_string(n) +
                         " signal");
  }
  RealTensor out(with_axis(bins.shape(), axis, n));
  std::vector<double> bre(f.len), bim(f.len), sig;
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      for (std::size_t k = 0; k < f.len; ++k) {
        bre[k] = bins.re[f.index(o, k, i, f.len)];
        bim[k] = bins.im[f.index(o, k, i, f.len)];
      }
      synthesize_fiber(bre, bim, n, sig);
      for (std::size_t j = 0; j < n; ++j) out[f.index(o, j, i, n)] = sig[j];
    }
  }
  return out;
}

RealTensor idft(const HalfSpectrum& s) {
  const FiberLayout f = layout_of(s.bins.shape(), s.axis);
  const double tol = 1e-9 * std::max(1.0, std::max(max_abs(s.bins.re), max_abs(s.bins.im)));
  const bool has_nyquist = s.original_len % 2 == 0;
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      if (std::fabs(s.bins.im[f.index(o, 0, i, f.len)]) > tol) {
        throw InvariantError("idft: DC bin has a non-zero imaginary part");
      }
      if (has_nyquist && f.len >= 1 && std::fabs(s.bins.im[f.index(o, f.len - 1, i, f.len)]) > tol) {
        throw InvariantError("idft: Nyquist bin has a non-zero imaginary part");
      }
    }
  }
  return synthesize(s.bins, s.original_len, s.axis);
}

RealTensor dft_adjoint(const ComplexTensor& grad_bins, std::size_t n, std::size_t axis) {
  const FiberLayout f = layout_of(grad_bins.shape(), axis);
  if (n < 2 || f.len != half_length(n)) {
    throw DimensionError("dft_adjoint: gradient with " + std::to_string(f.len) + " bins does not match N=" +
                         std::to_string(n));
  }
  // sum_k g_re cos - g_im sin equals N * synthesize(g / w).
  ComplexTensor scaled = grad_bins;
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t k = 0; k < f.len; ++k) {
      const double w = bin_weight(k, n);
      for (std::size_t i = 0; i < f.inner; ++i) {
        scaled.re[f.index(o, k, i, f.len)] /= w;
        scaled.im[f.index(o, k, i, f.len)] /= w;
      }
    }
  }
  return scale(synthesize(scaled, n, axis), static_cast<double>(n));
}

ComplexTensor synthesize_adjoint(const RealTensor& grad, std::size_t axis) {
  // d/d re_k = (w_k/N) Re DFT(g)_k, d/d im_k = (w_k/N) Im DFT(g)_k.
  HalfSpectrum g = dft(grad, axis);
  const std::size_t n = g.original_len;
  const FiberLayout f = layout_of(g.bins.shape(), axis);
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t k = 0; k < f.len; ++k) {
      const double w = bin_weight(k, n) / static_cast<double>(n);
      for (std::size_t i = 0; i < f.inner; ++i) {
        g.bins.re[f.index(o, k, i, f.len)] *= w;
        g.bins.im[f.index(o, k, i, f.len)] *= w;
      }
    }
  }
  return std::move(g.bins);
}

ComplexTensor full_spectrum(const HalfSpectrum& s) {
  const FiberLayout f = layout_of(s.bins.shape(), s.axis);
  const std::size_t n = s.original_len;
  ComplexTensor full(with_axis(s.bins.shape(), s.axis, n));
  for (std::size_t o = 0; o < f.outer; ++o) {
    for (std::size_t i = 0; i < f.inner; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const bool mirrored = k >= f.len;
        const std::size_t src = mirrored ? n - k : k;
        const double re = s.bins.re[f.index(o, src, i, f.len)];
        const double im = s.bins.im[f.index(o, src, i, f.len)];
        full.re[f.index(o, k, i, n)] = re;
        full.im[f.index(o, k, i, n)] = mirrored ? -im : im;
      }
    }
  }
  return full;
}

std::pair<RealTensor, RealTensor> decompose(const RealTensor& x) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw DimensionError("decompose: expected rank 1 or 2, got " + shape_to_string(x.shape()));
  }
  const std::size_t axis = x.rank() - 1;
  HalfSpectrum s = dft(x, axis);
  const RealTensor zeros(s.bins.re.shape());
  HalfSpectrum cosine{ComplexTensor(s.bins.re, zeros), s.original_len, axis};
  HalfSpectrum sine{ComplexTensor(zeros, s.bins.im), s.original_len, axis};
  return {idft(cosine), idft(sine)};
}

ComplexTensor complex_dft_rows(const ComplexTensor& x, bool inverse) {
  if (x.re.rank() != 2) throw DimensionError("complex_dft_rows: expected a matrix");
  const std::size_t rows = x.re.rows(), n = x.re.cols();
  ComplexTensor out = x;
  const double norm = inverse ? 1.0 / static_cast<double>(n) : 1.0;
  if (is_power_of_two(n)) {
    auto plan = plan_for(n);
    for (std::size_t r = 0; r < rows; ++r) {
      plan->execute(out.re.data().data() + r * n, out.im.data().data() + r * n, inverse);
    }
  } else {
    const AngleTable t(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        double sr = 0.0, si = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t m = (k * j) % n;
          const double c = t.c[m], s = sign * t.s[m];
          sr += x.re.at(r, j) * c - x.im.at(r, j) * s;
          si += x.re.at(r, j) * s + x.im.at(r, j) * c;
        }
        out.re.at(r, k) = sr;
        out.im.at(r, k) = si;
      }
    }
  }
  if (inverse) {
    out.re = scale(out.re, norm);
    out.im = scale(out.im, norm);
  }
  return out;
}

}  // namespace fct::spectral
