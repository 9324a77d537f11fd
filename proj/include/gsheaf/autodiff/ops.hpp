#pragma once

#include <Eigen/SparseCore>
#include <random>
#include <vector>

#include "gsheaf/autodiff/tape.hpp"

namespace gsheaf::ad {

enum class Activation { identity, elu, tanh, softplus, exp, relu };

// Elementwise and reductions. Binary ops require equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var activate(Var a, Activation act);
inline Var elu(Var a) { return activate(a, Activation::elu); }
inline Var tanh(Var a) { return activate(a, Activation::tanh); }
inline Var softplus(Var a) { return activate(a, Activation::softplus); }
inline Var exp(Var a) { return activate(a, Activation::exp); }
/// Values clipped to [lo, hi]; gradient passes only where unclipped.
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
Var mean(Var a);

// Shape plumbing.
Var reshape(Var a, std::vector<int> shape);
/// Concatenates along axis 0; trailing shapes must agree.
Var concat(const std::vector<Var>& parts);
/// Column-wise concatenation of rank-2 operands with equal row counts.
Var concat_cols(const std::vector<Var>& parts);
/// out[k] = a[idx[k]] along axis 0.
Var gather(Var a, std::vector<int> idx);
/// out[idx[k]] += a[k] along axis 0, with `rows` output rows.
Var scatter_add(Var a, std::vector<int> idx, int rows);

// Linear algebra on rank-2 / batched rank-3 operands.
/// op(a) op(b) for rank-2 operands.
Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
/// X (N x c) + b (c), broadcast over rows.
Var add_bias(Var x, Var b);
Var transpose(Var a);
/// Swaps the last two axes of a rank-3 tensor.
Var transpose_batched(Var a);
/// Batched op(a) op(b); a batch of size 1 broadcasts.
Var bmm(Var a, Var b, bool trans_a = false, bool trans_b = false);
/// out[o[k]] += A[ai[k]] X[xi[k]] for A (Ba,m,p) and X (Bx,p,c); output (rows,m,c).
Var bmm_indexed(Var a, Var x, std::vector<int> ai, std::vector<int> xi, std::vector<int> oi,
                int rows);
/// out[o[k]] += A[ai[k]] S[si[k]] A[ai[k]]^T for A (Ba,m,p), S (Bs,p,p); output (rows,m,m).
Var congruence_indexed(Var a, Var s, std::vector<int> ai, std::vector<int> si,
                       std::vector<int> oi, int rows);
/// A S A^T with A (B,m,p) or (1,m,p) and S (B,p,p).
Var congruence(Var a, Var s);
/// (I_n ⊗ W) X for W (d,d) and X (n*d, c).
Var kron_identity_apply(Var w, Var x);
/// out[v,c,:] = sum_c' W[c',c] X[v,c',:] for X (n,h,k) and W (h,h).
Var channel_mix(Var x, Var w);
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// A X for a constant sparse A (R,N) and X (N,c).
Var sparse_matmul(const SparseRowMatrix& a, Var x);
/// Sum over the middle axis of a rank-3 tensor: (a,b,c) -> (a,c).
Var sum_middle(Var x);
/// out[r,:] = e[r] * X[r,:] for X (R,C) and e (R).
Var scale_rows(Var x, Var e);

// Symmetric matrix functions (batched, rank 3).
/// S^{1/2} through an eigendecomposition; the spectrum is clamped at 0.
Var sym_sqrt(Var s);
/// Pseudo-inverse square root; eigenvalues at or below `cutoff` map to 0.
Var sym_inv_sqrt(Var s, double cutoff = 1e-10);
/// Lower Cholesky factor of sym(S) + jitter I with the smallest jitter in
/// {0, 1e-9, 1e-8, ..., 1e-3} that factors; FactorizationError otherwise.
Var cholesky(Var s);
/// Cayley transform (I - S)^{-1} (I + S); falls back to exp(S) when I - S
/// is numerically singular.
Var cayley(Var s);
/// Skew-symmetric (B,d,d) from strict upper-triangle values (B, d(d-1)/2).
Var skew_from_vec(Var v, int d);
/// Diagonal (B,d,d) from (B,d).
Var diag_embed(Var v);
/// Rows mu_v + L_v z_{v,t}, output (n*T, d), for mu (n,d), L (n,d,d) and
/// constant noise z (n,T,d).
Var sample_affine(Var mu, Var l, const Tensor& z);

/// Jitter levels tried by cholesky().
const std::vector<double>& cholesky_jitter_schedule();

/// Uniform Glorot-style initialization, bound sqrt(6 / (fan_in + fan_out)).
Tensor glorot(std::vector<int> shape, int fan_in, int fan_out, std::mt19937_64& rng);

}  // namespace gsheaf::ad
