#include "fct/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "fct/spectral/dft.hpp"

namespace fct::ad {

namespace {

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::logic_error("operands recorded on different tapes");
  return a.tape();
}

void require_rank2(const RealTensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_to_string(t.shape()));
}

std::size_t vector_length(const RealTensor& v) {
  if (v.rank() == 1) return v.dim(0);
  if (v.rank() == 2 && v.rows() == 1) return v.cols();
  throw DimensionError("expected a vector, got " + shape_to_string(v.shape()));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(fct::matmul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const RealTensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, fct::matmul_nt(g, b.value()));
    if (tp.requires_grad(b)) tp.accumulate(b, fct::matmul_tn(a.value(), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(fct::matmul_nt(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const RealTensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, fct::matmul(g, b.value()));
    if (tp.requires_grad(b)) tp.accumulate(b, fct::matmul_tn(g, a.value()));
  });
}

Var matmul_tn(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(fct::matmul_tn(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const RealTensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, fct::matmul_nt(b.value(), g));
    if (tp.requires_grad(b)) tp.accumulate(b, fct::matmul(a.value(), g));
  });
}

Var transpose(Var a) {
  return a.tape().record(fct::transpose(a.value()), {a},
                         [a](Tape& tp, const RealTensor& g) { tp.accumulate(a, fct::transpose(g)); });
}

Var reshape(Var a, Shape shape) {
  const Shape original = a.shape();
  return a.tape().record(a.value().reshaped(std::move(shape)), {a}, [a, original](Tape& tp, const RealTensor& g) {
    tp.accumulate(a, g.reshaped(original));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) throw DimensionError("ad::add: shape mismatch");
  return t.record(fct::add(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const RealTensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) throw DimensionError("ad::sub: shape mismatch");
  return t.record(fct::sub(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const RealTensor& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) tp.accumulate(b, fct::scale(g, -1.0));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) throw DimensionError("ad::mul: shape mismatch");
  return t.record(fct::mul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const RealTensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, fct::mul(g, b.value()));
    if (tp.requires_grad(b)) tp.accumulate(b, fct::mul(g, a.value()));
  });
}

Var scale(Var a, double s) {
  return a.tape().record(fct::scale(a.value(), s), {a},
                         [a, s](Tape& tp, const RealTensor& g) { tp.accumulate(a, fct::scale(g, s)); });
}

Var add_row_vector(Var x, Var v) {
  Tape& t = same_tape(x, v);
  const RealTensor& xv = x.value();
  require_rank2(xv, "add_row_vector");
  const std::size_t r = xv.rows(), c = xv.cols();
  if (vector_length(v.value()) != c) throw DimensionError("add_row_vector: vector length does not match columns");
  RealTensor out = xv;
  const auto bv = v.value().data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += bv[j];
  return t.record(std::move(out), {x, v}, [x, v, r, c](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, g);
    if (tp.requires_grad(v)) {
      RealTensor gv(v.shape());
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gv[j] += g.at(i, j);
      tp.accumulate(v, std::move(gv));
    }
  });
}

Var affine(Var x, Var w, Var b) { return add_row_vector(matmul(x, w), b); }

Var sum(Var a) {
  return a.tape().record(RealTensor::scalar(fct::sum(a.value())), {a}, [a](Tape& tp, const RealTensor& g) {
    tp.accumulate(a, RealTensor::filled(a.shape(), g.item()));
  });
}

Var weighted_sum(Var a, const RealTensor& w) {
  if (!a.value().same_shape(w)) throw DimensionError("weighted_sum: weight shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += a.value()[i] * w[i];
  return a.tape().record(RealTensor::scalar(s), {a}, [a, w](Tape& tp, const RealTensor& g) {
    tp.accumulate(a, fct::scale(w, g.item()));
  });
}

Var mean_rows(Var x) {
  const RealTensor& xv = x.value();
  require_rank2(xv, "mean_rows");
  const std::size_t r = xv.rows(), c = xv.cols();
  RealTensor out({1, c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += xv.at(i, j);
  const double inv = 1.0 / static_cast<double>(r);
  for (auto& v : out.data()) v *= inv;
  return x.tape().record(std::move(out), {x}, [x, r, c, inv](Tape& tp, const RealTensor& g) {
    RealTensor gx({r, c});
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx.at(i, j) = g[j] * inv;
    tp.accumulate(x, std::move(gx));
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = same_tape(x, gain);
  same_tape(x, bias);
  const RealTensor& xv = x.value();
  require_rank2(xv, "layer_norm");
  const std::size_t r = xv.rows(), c = xv.cols();
  if (vector_length(gain.value()) != c || vector_length(bias.value()) != c) {
    throw DimensionError("layer_norm: gain/bias length does not match " + std::to_string(c) + " columns");
  }
  // Normalised rows and inverse deviations, shared with the closure.
  auto xhat = std::make_shared<RealTensor>(Shape{r, c});
  auto inv_std = std::make_shared<std::vector<double>>(r);
  RealTensor out({r, c});
  const auto gv = gain.value().data();
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += xv.at(i, j);
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xv.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xv.at(i, j) - mean) * inv;
      xhat->at(i, j) = h;
      out.at(i, j) = h * gv[j] + bv[j];
    }
  }
  return t.record(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std, r, c](Tape& tp,
                                                                                       const RealTensor& g) {
    const auto gv = gain.value().data();
    if (tp.requires_grad(gain) || tp.requires_grad(bias)) {
      RealTensor gg(gain.shape()), gb(bias.shape());
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          gg[j] += g.at(i, j) * xhat->at(i, j);
          gb[j] += g.at(i, j);
        }
      }
      tp.accumulate(gain, std::move(gg));
      tp.accumulate(bias, std::move(gb));
    }
    if (tp.requires_grad(x)) {
      RealTensor gx({r, c});
      const double inv_c = 1.0 / static_cast<double>(c);
      for (std::size_t i = 0; i < r; ++i) {
        double mean_d = 0.0, mean_dh = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const double d = g.at(i, j) * gv[j];
          mean_d += d;
          mean_dh += d * xhat->at(i, j);
        }
        mean_d *= inv_c;
        mean_dh *= inv_c;
        for (std::size_t j = 0; j < c; ++j) {
          const double d = g.at(i, j) * gv[j];
          gx.at(i, j) = (*inv_std)[i] * (d - mean_d - xhat->at(i, j) * mean_dh);
        }
      }
      tp.accumulate(x, std::move(gx));
    }
  });
}

Var gelu(Var x) {
  const RealTensor& xv = x.value();
  RealTensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * std::numbers::sqrt2 / 2.0));
  return x.tape().record(std::move(out), {x}, [x](Tape& tp, const RealTensor& g) {
    const RealTensor& xv = x.value();
    RealTensor gx(xv.shape());
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      gx[i] = g[i] * (cdf + v * pdf);
    }
    tp.accumulate(x, std::move(gx));
  });
}

Var softmax_rows(Var x) {
  require_rank2(x.value(), "softmax_rows");
  auto y = std::make_shared<RealTensor>(attention::softmax(x.value(), 1));
  RealTensor out = *y;
  return x.tape().record(std::move(out), {x}, [x, y](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, attention::softmax_backward(*y, g, 1));
  });
}

Var logmax_rows(Var x, const attention::LogmaxPolicy& policy) {
  require_rank2(x.value(), "logmax_rows");
  return x.tape().record(attention::logmax(x.value(), 1, policy), {x}, [x, policy](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, attention::logmax_grad(x.value(), g, 1, policy));
  });
}

Var normalize_rows(Var x, attention::Normalizer kind, const attention::LogmaxPolicy& policy) {
  switch (kind) {
    case attention::Normalizer::logmax:
      return logmax_rows(x, policy);
    case attention::Normalizer::softmax:
      return softmax_rows(x);
    case attention::Normalizer::identity:
      return x;
  }
  return x;
}

std::pair<Var, Var> dft_rows(Var x) {
  require_rank2(x.value(), "dft_rows");
  const std::size_t n = x.value().cols();
  spectral::HalfSpectrum s = spectral::dft(x.value(), 1);
  const Shape bins_shape = s.bins.re.shape();
  Tape& t = x.tape();
  Var re = t.record(std::move(s.bins.re), {x}, [x, n, bins_shape](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, spectral::dft_adjoint(ComplexTensor(g, RealTensor(bins_shape)), n, 1));
  });
  Var im = t.record(std::move(s.bins.im), {x}, [x, n, bins_shape](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, spectral::dft_adjoint(ComplexTensor(RealTensor(bins_shape), g), n, 1));
  });
  return {re, im};
}

Var synthesize_rows(Var re, Var im, std::size_t n) {
  Tape& t = same_tape(re, im);
  require_rank2(re.value(), "synthesize_rows");
  RealTensor out = spectral::synthesize(ComplexTensor(re.value(), im.value()), n, 1);
  return t.record(std::move(out), {re, im}, [re, im](Tape& tp, const RealTensor& g) {
    ComplexTensor gb = spectral::synthesize_adjoint(g, 1);
    tp.accumulate(re, std::move(gb.re));
    tp.accumulate(im, std::move(gb.im));
  });
}

Var blend_columns(Var a, Var b, Var alpha) {
  Tape& t = same_tape(a, b);
  same_tape(a, alpha);
  const RealTensor& av = a.value();
  const RealTensor& bv = b.value();
  require_rank2(av, "blend_columns");
  if (!av.same_shape(bv)) throw DimensionError("blend_columns: operand shapes differ");
  const std::size_t r = av.rows(), c = av.cols();
  if (vector_length(alpha.value()) != c) {
    throw DimensionError("blend_columns: alpha has " + std::to_string(alpha.value().size()) + " entries for " +
                         std::to_string(c) + " columns");
  }
  const auto al = alpha.value().data();
  RealTensor out({r, c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = al[j] * av.at(i, j) + (1.0 - al[j]) * bv.at(i, j);
  return t.record(std::move(out), {a, b, alpha}, [a, b, alpha, r, c](Tape& tp, const RealTensor& g) {
    const auto al = alpha.value().data();
    if (tp.requires_grad(a)) {
      RealTensor ga({r, c});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga.at(i, j) = al[j] * g.at(i, j);
      tp.accumulate(a, std::move(ga));
    }
    if (tp.requires_grad(b)) {
      RealTensor gb({r, c});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb.at(i, j) = (1.0 - al[j]) * g.at(i, j);
      tp.accumulate(b, std::move(gb));
    }
    if (tp.requires_grad(alpha)) {
      RealTensor gal(alpha.shape());
      const RealTensor& av = a.value();
      const RealTensor& bv = b.value();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gal[j] += g.at(i, j) * (av.at(i, j) - bv.at(i, j));
      tp.accumulate(alpha, std::move(gal));
    }
  });
}

namespace {

RealTensor resize_cols(const RealTensor& x, std::size_t cols) {
  const std::size_t r = x.rows(), keep = std::min(cols, x.cols());
  RealTensor out({r, cols});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < keep; ++j) out.at(i, j) = x.at(i, j);
  return out;
}

}  // namespace

Var pad_cols(Var x, std::size_t cols) {
  require_rank2(x.value(), "pad_cols");
  const std::size_t original = x.value().cols();
  if (cols < original) throw DimensionError("pad_cols: target narrower than input");
  if (cols == original) return x;
  return x.tape().record(resize_cols(x.value(), cols), {x}, [x, original](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, resize_cols(g, original));
  });
}

Var crop_cols(Var x, std::size_t cols) {
  require_rank2(x.value(), "crop_cols");
  const std::size_t original = x.value().cols();
  if (cols > original) throw DimensionError("crop_cols: target wider than input");
  if (cols == original) return x;
  return x.tape().record(resize_cols(x.value(), cols), {x}, [x, original](Tape& tp, const RealTensor& g) {
    tp.accumulate(x, resize_cols(g, original));
  });
}

namespace {

// Index map of patchify: source row for (output row, window offset).
struct PatchGeometry {
  std::size_t h, w, p, c;
  std::size_t out_rows() const { return (h / p) * (w / p); }
  std::size_t out_cols() const { return p * p * c; }
  std::size_t source_row(std::size_t out_row, std::size_t dy, std::size_t dx) const {
    const std::size_t py = out_row / (w / p), px = out_row % (w / p);
    return (py * p + dy) * w + (px * p + dx);
  }
};

}  // namespace

Var patchify(Var x, std::size_t h, std::size_t w, std::size_t p) {
  const RealTensor& xv = x.value();
  require_rank2(xv, "patchify");
  if (p == 0 || h % p || w % p) {
    throw SizeError("patchify: " + std::to_string(h) + "x" + std::to_string(w) + " grid is not divisible by " +
                    std::to_string(p));
  }
  if (xv.rows() != h * w) throw DimensionError("patchify: token count does not match the grid");
  const PatchGeometry geo{h, w, p, xv.cols()};
  RealTensor out({geo.out_rows(), geo.out_cols()});
  for (std::size_t o = 0; o < geo.out_rows(); ++o)
    for (std::size_t dy = 0; dy < p; ++dy)
      for (std::size_t dx = 0; dx < p; ++dx) {
        const std::size_t src = geo.source_row(o, dy, dx);
        for (std::size_t ch = 0; ch < geo.c; ++ch) out.at(o, (dy * p + dx) * geo.c + ch) = xv.at(src, ch);
      }
  return x.tape().record(std::move(out), {x}, [x, geo](Tape& tp, const RealTensor& g) {
    RealTensor gx(x.shape());
    for (std::size_t o = 0; o < geo.out_rows(); ++o)
      for (std::size_t dy = 0; dy < geo.p; ++dy)
        for (std::size_t dx = 0; dx < geo.p; ++dx) {
          const std::size_t src = geo.source_row(o, dy, dx);
          for (std::size_t ch = 0; ch < geo.c; ++ch) gx.at(src, ch) += g.at(o, (dy * geo.p + dx) * geo.c + ch);
        }
    tp.accumulate(x, std::move(gx));
  });
}

Var cross_entropy(Var logits, std::size_t label) {
  const RealTensor& z = logits.value();
  const std::size_t k = z.size();
  if (label >= k) throw std::out_of_range("cross_entropy: label out of range");
  double m = z[0];
  for (std::size_t i = 1; i < k; ++i) m = std::max(m, z[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::exp(z[i] - m);
  const double lse = m + std::log(s);
  return logits.tape().record(RealTensor::scalar(lse - z[label]), {logits},
                              [logits, label, lse](Tape& tp, const RealTensor& g) {
                                const RealTensor& z = logits.value();
                                RealTensor gz(z.shape());
                                for (std::size_t i = 0; i < z.size(); ++i) {
                                  gz[i] = g.item() * (std::exp(z[i] - lse) - (i == label ? 1.0 : 0.0));
                                }
                                tp.accumulate(logits, std::move(gz));
                              });
}

void check_finite(Var x, const std::string& stage) {
  if (!fct::all_finite(x.value())) throw NumericError(stage, "non-finite value in " + shape_to_string(x.shape()));
}

}  // namespace fct::ad
