#pragma once

// Differentiable primitives. Every op takes the Graph it records onto; with an
// inference graph (record=false) nothing is taped.
//
// Broadcasting is limited to leading batch dimensions (matmul against a rank-2
// right operand, bias and mask broadcast over leading axes). Any other shape
// mismatch throws DimensionError naming both shapes.

#include <functional>

#include "capgen/tensor.hpp"

namespace capgen::nd {

// a[..., m, k] x b[k, n] or a[L..., m, k] x b[L..., k, n].
template <class R>
Tensor<R> matmul(Graph<R>& g, const Tensor<R>& a, const Tensor<R>& b);

// Swaps the last two axes.
template <class R>
Tensor<R> transpose_last2(Graph<R>& g, const Tensor<R>& x);

template <class R>
Tensor<R> permute(Graph<R>& g, const Tensor<R>& x, const std::vector<std::size_t>& axes);

template <class R>
Tensor<R> reshape(Graph<R>& g, const Tensor<R>& x, Shape shape);

template <class R>
Tensor<R> add(Graph<R>& g, const Tensor<R>& a, const Tensor<R>& b);

template <class R>
Tensor<R> mul(Graph<R>& g, const Tensor<R>& a, const Tensor<R>& b);

// x[..., d] + bias[d]; also used for adding a [T, d] table to [B, T, d].
template <class R>
Tensor<R> add_broadcast(Graph<R>& g, const Tensor<R>& x, const Tensor<R>& row);

template <class R>
Tensor<R> scale(Graph<R>& g, const Tensor<R>& x, R factor);

template <class R>
Tensor<R> relu(Graph<R>& g, const Tensor<R>& x);

// Numerically stable softmax (max subtracted) along `axis`.
template <class R>
Tensor<R> softmax(Graph<R>& g, const Tensor<R>& x, std::size_t axis);

// Softmax over the last axis of x[..., Tq, Tk] where forbidden entries get -inf
// bias. mask is [Tq, Tk] (broadcast over all leading axes) or [B, Tq, Tk]
// (matched against axis 0, broadcast over the axes between). Forbidden entries
// come out as exactly 0. A row with no permitted key throws ContractError.
template <class R>
Tensor<R> masked_softmax(Graph<R>& g, const Tensor<R>& x, const BoolTensor& mask);

// Normalizes over the last axis, then applies gain/bias.
template <class R>
Tensor<R> layer_norm(Graph<R>& g, const Tensor<R>& x, const Tensor<R>& gain, const Tensor<R>& bias,
                     R eps);

// Row gather: table[V, d], ids[...] -> [..., d]. Out-of-range id throws IndexError.
template <class R>
Tensor<R> embedding(Graph<R>& g, const Tensor<R>& table, const IndexTensor& ids);

// Mean over positions where mask is true of -log softmax(logits)[target].
// logits [B, T, V], targets/mask [B, T]. An empty mask yields 0 and no gradient.
template <class R>
Tensor<R> cross_entropy(Graph<R>& g, const Tensor<R>& logits, const IndexTensor& targets,
                        const BoolTensor& mask);

template <class R>
Tensor<R> sum(Graph<R>& g, const Tensor<R>& x);

template <class R>
Tensor<R> mean(Graph<R>& g, const Tensor<R>& x);

// Finite-difference gradient check.
template <class R>
using ScalarFn = std::function<Tensor<R>(Graph<R>&, const Tensor<R>&)>;

// Runs f once with backward to get the analytic gradient w.r.t. x, then
// perturbs each entry of x by +-eps. Returns the max over entries of
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). x's data is
// restored on return.
template <class R>
double grad_check(const ScalarFn<R>& f, Tensor<R> x, double eps);

}  // namespace capgen::nd
