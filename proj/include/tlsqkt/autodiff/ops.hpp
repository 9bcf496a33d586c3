// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every function records exactly one node on the
// tape of its first operand.
//
// Broadcasting: binary elementwise ops accept either identical shapes or a
// right operand of shape [n] where n is the trailing dimension of the left
// operand; the vector is then added/multiplied into every row. Nothing else
// broadcasts, reshape explicitly.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tlsqkt/autodiff/tape.hpp"

namespace tlsqkt::ad {

using Mask = std::vector<std::uint8_t>;

/// [..., k] x [k, n] -> [..., n]; leading dims of `a` are flattened into rows.
Tensor matmul(const Tensor& a, const Tensor& b);

enum class Elementwise { add, sub, mul, sigmoid, tanh, relu };

Tensor elementwise(Elementwise kind, const Tensor& a);
Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor scale(const Tensor& a, double factor);

/// `condition` has one flag per element; true selects `a`.
Tensor where(const Mask& condition, const Tensor& a, const Tensor& b);

/// Softmax over the trailing axis. `keep` flags one entry per logit; dropped
/// entries get exactly zero probability. A row with nothing kept throws.
Tensor softmax_masked(const Tensor& logits, const Mask& keep);

Tensor concat(std::span<const Tensor> parts, Index axis);
Tensor concat(std::initializer_list<Tensor> parts, Index axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, Index axis, Index begin, Index end);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Normalises over the trailing axis then applies gain and bias of shape [d].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// table [rows, d], ids with shape `ids_shape` -> [ids_shape..., d]. Id 0 is
/// padding: it yields a zero row and row 0 never receives gradient.
Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids, Shape ids_shape);

/// a [..., K], index per leading position in [0, K) -> [...].
Tensor gather_last(const Tensor& a, std::span<const std::int32_t> index);

/// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

/// q, k [B, T, d] -> per-head scores [B, H, T, T] = scale * Q_h K_h^T.
Tensor attention_scores(const Tensor& q, const Tensor& k, Index n_heads, double scale);
/// weights [B, H, T, T], v [B, T, d] -> [B, T, d] with heads concatenated.
Tensor attention_context(const Tensor& weights, const Tensor& v, Index n_heads);

}  // namespace tlsqkt::ad
