#pragma once

#include <cstddef>
#include <string>

#include "fct/attention/normalizers.hpp"
#include "fct/autodiff/ops.hpp"
#include "fct/core/tensor.hpp"

namespace fct::attention {

// Spatial-field attention: Normalize(Q K^T) V with Q = x Wq, K = x Wk,
// V = x Wv for tokens x[L x C]. Softmax is the classic form.
ad::Var naive_sa(ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv, Normalizer normalizer = Normalizer::softmax);
RealTensor naive_sa(const RealTensor& x, const RealTensor& wq, const RealTensor& wk, const RealTensor& wv);

struct CsaOptions {
  Normalizer normalizer = Normalizer::logmax;
  LogmaxPolicy policy{};
  // Prefix for diagnostics raised on non-finite attention maps.
  std::string stage = "csa";
};

// Attention logits and normalised maps of one CSA call.
struct CsaTrace {
  RealTensor logits_r;
  RealTensor logits_i;
  RealTensor attn_r;
  RealTensor attn_i;
};

// Complex self-attention over the rows of x[D x N], N a power of two:
//   (Xr, Xi)       = half-spectrum DFT of each row, L = N/2 + 1 bins
//   Q, K, V        = Wq X, Wk X, Wv X (one real D x D kernel per projection,
//                    applied to both planes)
//   Attn_r, Attn_i = Normalize(Qr^T Kr), Normalize(Qi^T Ki), each L x L
//   CSA_r          = [alpha Attn_r + (1 - alpha) Attn_i] Vr^T
//   CSA_i          = [alpha Attn_i + (1 - alpha) Attn_r] Vi^T
// alpha (length L) scales the columns of both maps. The result is brought
// back to the spatial field and returned as D x N.
//
// Throws SizeError when N is not a power of two (callers pad) and
// NumericError naming the attention map when it turns non-finite.
ad::Var csa(ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv, ad::Var alpha, const CsaOptions& options = {},
            CsaTrace* trace = nullptr);

struct CsaWeights {
  RealTensor wq;
  RealTensor wk;
  RealTensor wv;
  RealTensor alpha;
};

// Inference form of csa() on plain tensors.
RealTensor csa(const RealTensor& x, const CsaWeights& weights, const CsaOptions& options = {},
               CsaTrace* trace = nullptr);

// Both sides of DFT(X X^T X) = DFT(X) DFT(X^T) DFT(X) for a square X, with
// DFT the full complex transform of every row. The identity is not assumed;
// the probe only measures how far apart the two sides are.
struct AssociativityReport {
  std::size_t n = 0;
  double lhs_norm = 0.0;
  double rhs_norm = 0.0;
  double abs_discrepancy = 0.0;  // Frobenius norm of lhs - rhs
  double rel_discrepancy = 0.0;  // abs / max(lhs_norm, rhs_norm); 0 when both vanish
};

AssociativityReport associativity_probe(const RealTensor& x);

}  // namespace fct::attention
