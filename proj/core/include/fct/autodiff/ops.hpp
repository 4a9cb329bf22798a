#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "fct/attention/normalizers.hpp"
#include "fct/autodiff/tape.hpp"

// Differentiable primitives. Every function records one node (dft_rows
// records two) whose closure is the analytic adjoint of the forward map.
namespace fct::ad {

Var matmul(Var a, Var b);     // a[m x k] b[k x n]
Var matmul_nt(Var a, Var b);  // a[m x k] b[n x k]^T
Var matmul_tn(Var a, Var b);  // a[k x m]^T b[k x n]
Var transpose(Var a);
Var reshape(Var a, Shape shape);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// x[r x c] + v[c] on every row.
Var add_row_vector(Var x, Var v);
// x[r x c] w[c x n] + b[n].
Var affine(Var x, Var w, Var b);

Var sum(Var a);
// sum(a .* w) with a constant weight tensor; the usual probe in gradient checks.
Var weighted_sum(Var a, const RealTensor& w);
// Mean over rows: [r x c] -> [1 x c].
Var mean_rows(Var x);

// Row-wise LayerNorm over the last axis with gain and bias of length c.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Exact GELU, 0.5 x (1 + erf(x / sqrt 2)).
Var gelu(Var x);

Var softmax_rows(Var x);
Var logmax_rows(Var x, const attention::LogmaxPolicy& policy = {});
// Applies the chosen normaliser along rows; identity returns x unchanged.
Var normalize_rows(Var x, attention::Normalizer kind, const attention::LogmaxPolicy& policy = {});

// Half-spectrum DFT of each row of x[r x n] -> (re, im), each [r x (n/2+1)].
std::pair<Var, Var> dft_rows(Var x);
// Real rows of length n synthesised from half-spectrum rows (re, im).
Var synthesize_rows(Var re, Var im, std::size_t n);

// alpha_j a_ij + (1 - alpha_j) b_ij, alpha broadcast across rows.
Var blend_columns(Var a, Var b, Var alpha);

Var pad_cols(Var x, std::size_t cols);
Var crop_cols(Var x, std::size_t cols);

// Groups non-overlapping p x p windows of a row-major (h*w) x c token grid:
// output row (py * w/p + px), column ((dy * p + dx) * c + ch).
Var patchify(Var x, std::size_t h, std::size_t w, std::size_t p);

// Softmax cross-entropy of one logits row against a class index.
Var cross_entropy(Var logits, std::size_t label);

// Throws NumericError naming `stage` when x holds a non-finite value.
void check_finite(Var x, const std::string& stage);

}  // namespace fct::ad
