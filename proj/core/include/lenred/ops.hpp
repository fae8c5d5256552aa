// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every operation computes its result in one
// forward pass and attaches an analytic backward rule; gradients
// accumulate additively across fan-out. Shape violations throw
// ConfigError. Probabilities entering log/KL are clamped below by
// kProbEpsilon instead of throwing, since masked softmax outputs
// legitimately underflow.

#pragma once

#include <vector>

#include "lenred/tensor.hpp"

namespace lenred::ad {

inline constexpr double kProbEpsilon = 1e-12;

// Elementwise. add/sub accept equal shapes, a scalar right operand, or a
// [n,m] left with [m] right broadcast over the leading axis. mul accepts
// equal shapes or a scalar on either side; div a scalar or equal-shape
// divisor.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);
Value scale(const Value& a, double c);
Value add_const(const Value& a, double c);

// Matrix products. a may be rank-1 (treated as a row vector, result
// rank-1). matmul_nt(a, b) computes a * b^T without materializing the
// transpose.
Value matmul(const Value& a, const Value& b);
Value matmul_nt(const Value& a, const Value& b);
// x * W + b with x [n,d] or [d], W [d,m], b [m].
Value linear(const Value& x, const Value& w, const Value& b);

// Elementwise nonlinearities.
Value exp_(const Value& a);
Value log_(const Value& a);  // log(max(a, kProbEpsilon)); zero gradient in the clamped region
Value tanh_(const Value& a);
Value sigmoid(const Value& a);
Value softplus(const Value& a);
Value gelu(const Value& a);  // exact erf form

// Rows = last axis. Rank-1 inputs are a single row.
Value softmax_rows(const Value& a);
Value l2norm_rows(const Value& a);                              // [n,d] -> [n], [d] -> scalar
Value layer_norm(const Value& x, const Value& gain, const Value& bias);

// Same element count, new shape; gradient passes through unchanged.
Value reshape(const Value& a, std::vector<std::size_t> shape);

// Reductions and indexing.
Value sum(const Value& a);                                       // -> scalar
Value row(const Value& a, std::size_t i);                        // [n,d] -> [d]
Value index(const Value& a, std::size_t i);                      // [n] -> scalar
Value slice_cols(const Value& a, std::size_t first, std::size_t count);
Value concat_cols(const std::vector<Value>& parts);
Value embed_rows(const Value& table, const std::vector<int>& ids);
Value gather_rows(const Value& a, const std::vector<std::size_t>& rows);

// Losses.
Value cross_entropy(const Value& logits, std::size_t target);    // [C] -> scalar
Value kl_divergence(const Value& p, const Value& q);             // sum p*log(p/q), clamped

}  // namespace lenred::ad
