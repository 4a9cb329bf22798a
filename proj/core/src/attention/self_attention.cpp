#include "fct/attention/self_attention.hpp"

#include <algorithm>
#include <cmath>

#include "fct/spectral/dft.hpp"

namespace fct::attention {

ad::Var naive_sa(ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv, Normalizer normalizer) {
  ad::Var q = ad::matmul(x, wq);
  ad::Var k = ad::matmul(x, wk);
  ad::Var v = ad::matmul(x, wv);
  ad::Var attn = ad::normalize_rows(ad::matmul_nt(q, k), normalizer);
  return ad::matmul(attn, v);
}

RealTensor naive_sa(const RealTensor& x, const RealTensor& wq, const RealTensor& wk, const RealTensor& wv) {
  ad::Tape tape(false);
  return naive_sa(tape.constant(x), tape.constant(wq), tape.constant(wk), tape.constant(wv)).value();
}

ad::Var csa(ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv, ad::Var alpha, const CsaOptions& options,
            CsaTrace* trace) {
  const RealTensor& xv = x.value();
  if (xv.rank() != 2) throw DimensionError("csa: expected a D x N matrix, got " + shape_to_string(xv.shape()));
  const std::size_t d = xv.rows(), n = xv.cols();
  if (!spectral::is_power_of_two(n) || n < 2) {
    throw SizeError(options.stage + ": sequence length " + std::to_string(n) +
                    " is not a power of two >= 2; pad the sequence before attention");
  }
  for (const ad::Var* w : {&wq, &wk, &wv}) {
    if (w->shape() != Shape{d, d}) {
      throw DimensionError(options.stage + ": projection kernel " + shape_to_string(w->shape()) + " for " +
                           std::to_string(d) + " rows");
    }
  }
  const std::size_t l = spectral::half_length(n);
  if (alpha.value().size() != l) {
    throw DimensionError(options.stage + ": alpha has " + std::to_string(alpha.value().size()) + " entries for " +
                         std::to_string(l) + " spectral positions");
  }

  auto [xr, xi] = ad::dft_rows(x);
  ad::Var qr = ad::matmul(wq, xr), qi = ad::matmul(wq, xi);
  ad::Var kr = ad::matmul(wk, xr), ki = ad::matmul(wk, xi);
  ad::Var vr = ad::matmul(wv, xr), vi = ad::matmul(wv, xi);

  ad::Var logits_r = ad::matmul_tn(qr, kr);
  ad::Var logits_i = ad::matmul_tn(qi, ki);
  ad::Var attn_r = ad::normalize_rows(logits_r, options.normalizer, options.policy);
  ad::check_finite(attn_r, options.stage + ".attn_r");
  ad::Var attn_i = ad::normalize_rows(logits_i, options.normalizer, options.policy);
  ad::check_finite(attn_i, options.stage + ".attn_i");
  if (trace) {
    trace->logits_r = logits_r.value();
    trace->logits_i = logits_i.value();
    trace->attn_r = attn_r.value();
    trace->attn_i = attn_i.value();
  }

  ad::Var mix_r = ad::blend_columns(attn_r, attn_i, alpha);
  ad::Var mix_i = ad::blend_columns(attn_i, attn_r, alpha);
  ad::Var yr = ad::matmul_nt(vr, mix_r);
  ad::Var yi = ad::matmul_nt(vi, mix_i);
  ad::Var out = ad::synthesize_rows(yr, yi, n);
  ad::check_finite(out, options.stage + ".idft");
  return out;
}

RealTensor csa(const RealTensor& x, const CsaWeights& weights, const CsaOptions& options, CsaTrace* trace) {
  ad::Tape tape(false);
  return csa(tape.constant(x), tape.constant(weights.wq), tape.constant(weights.wk), tape.constant(weights.wv),
             tape.constant(weights.alpha), options, trace)
      .value();
}

AssociativityReport associativity_probe(const RealTensor& x) {
  if (x.rank() != 2 || x.rows() != x.cols()) {
    throw DimensionError("associativity_probe: expected a square matrix, got " + shape_to_string(x.shape()));
  }
  const std::size_t n = x.rows();
  const RealTensor zeros({n, n});
  const RealTensor xt = transpose(x);
  const ComplexTensor lhs = spectral::complex_dft_rows(ComplexTensor(matmul(matmul(x, xt), x), zeros));
  const ComplexTensor fx = spectral::complex_dft_rows(ComplexTensor(x, zeros));
  const ComplexTensor fxt = spectral::complex_dft_rows(ComplexTensor(xt, zeros));
  const ComplexTensor rhs = complex_matmul(complex_matmul(fx, fxt), fx);

  auto norm = [](const ComplexTensor& c) {
    return std::hypot(frobenius_norm(c.re), frobenius_norm(c.im));
  };
  AssociativityReport r;
  r.n = n;
  r.lhs_norm = norm(lhs);
  r.rhs_norm = norm(rhs);
  r.abs_discrepancy = norm(ComplexTensor(sub(lhs.re, rhs.re), sub(lhs.im, rhs.im)));
  const double ref = std::max(r.lhs_norm, r.rhs_norm);
  r.rel_discrepancy = ref > 0.0 ? r.abs_discrepancy / ref : 0.0;
  return r;
}

}  // namespace fct::attention
