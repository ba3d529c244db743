#pragma once

#include "numeric/tape.hpp"

#include <vector>

// Differentiable primitives. Every op records itself on the tape of its
// inputs; gradients are exact for the piecewise-smooth definitions below.
namespace mepo::nc {

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var one_minus(Var a);

Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var relu(Var a);
Var abs(Var a);

/// a + v and a * v where v's shape equals a trailing suffix of a's shape.
Var add_suffix(Var a, Var v);
Var mul_suffix(Var a, Var v);

/// x[..., C] times w[C, D] -> [..., D].
Var matmul_last(Var x, Var w);

/// Dilated causal convolution along the time axis, no padding.
/// x[..., T, C], w[K, C, D] -> [..., T - (K-1)*dilation, D].
Var conv_time(Var x, Var w, std::size_t dilation);

/// Mixes the region axis: out[b, n, ...] = sum_m p[n, m] * x[b, m, ...].
/// p is [N, N] (shared) or [B, N, N] (per batch item); x is [B, N, ...].
Var node_mix(Var p, Var x);

/// Mixes one axis of x with a weight matrix: x has size Q on `axis`, w is
/// [P, Q], the result has size P on `axis`.
Var mix_axis(Var w, Var x, std::size_t axis);

/// Swaps the two trailing axes.
Var transpose_last2(Var a);

/// Divides each trailing-axis row by its sum. Rows summing to zero become
/// uniform and pass no gradient. Inputs must be nonnegative.
Var row_normalize(Var a);

/// Row-wise softmax over the trailing axis of a rank-2 array.
Var softmax_rows(Var a);

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
/// Picks one index on `axis` and drops that axis.
Var select(Var a, std::size_t axis, std::size_t index);
Var reshape(Var a, Shape shape);
Var concat_last(const std::vector<Var>& parts);
/// Stacks equally-shaped arrays along a new trailing axis.
Var stack_last(const std::vector<Var>& parts);

Var mean_axis(Var a, std::size_t axis);
Var mean_all(Var a);
Var sum_all(Var a);

} // namespace mepo::nc
