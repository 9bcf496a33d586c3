// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameterised layers. Each forward function is a pure function of its
// parameters and inputs; parameter storage is owned by the structs below and
// registered on the caller's tape.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "tlsqkt/autodiff/ops.hpp"

namespace tlsqkt::nn {

using ad::Index;
using ad::Mask;
using ad::Parameter;
using ad::Shape;
using ad::Tape;
using ad::Tensor;

/// Dropout settings for one forward pass. Evaluation passes use the default.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  bool drops() const { return training && dropout > 0.0 && rng != nullptr; }
};

/// Lookup table with a reserved all-zero padding row 0.
struct EmbeddingTable {
  Parameter weights;  // [rows, dim]

  Index rows() const { return weights.shape.at(0); }
  Index dim() const { return weights.shape.at(1); }

  template <class F> void for_each_parameter(F&& fn) { fn(weights); }
  template <class F> void for_each_parameter(F&& fn) const { fn(weights); }
};

/// `n_ids` real ids 1..n_ids plus the padding row.
EmbeddingTable make_embedding(const std::string& name, Index n_ids, Index dim, std::mt19937_64& rng);

/// [ids_shape..., dim]. Raises ad::IndexError naming the table on a bad id.
Tensor embed_lookup(Tape& tape, const EmbeddingTable& table, std::span<const std::int32_t> ids,
                    const Shape& ids_shape);

struct LstmParams {
  Index input_dim = 0;
  Index hidden_dim = 0;
  // Each gate matrix maps concat(x_t, h_{t-1}) to the gate pre-activation.
  Parameter w_i, w_f, w_o, w_g;  // [input_dim + hidden_dim, hidden_dim]
  Parameter b_i, b_f, b_o, b_g;  // [hidden_dim]

  template <class F> void for_each_parameter(F&& fn) { visit(*this, fn); }
  template <class F> void for_each_parameter(F&& fn) const { visit(*this, fn); }

 private:
  template <class Self, class F> static void visit(Self& s, F& fn) {
    fn(s.w_i); fn(s.w_f); fn(s.w_o); fn(s.w_g);
    fn(s.b_i); fn(s.b_f); fn(s.b_o); fn(s.b_g);
  }
};

LstmParams make_lstm(const std::string& prefix, Index input_dim, Index hidden_dim,
                     std::mt19937_64& rng);

/// x [B, T, input_dim], `valid` one flag per (b, t). Starts from zero state;
/// where a step is invalid the previous hidden and cell states are carried.
Tensor lstm_forward(Tape& tape, const LstmParams& params, const Tensor& x, const Mask& valid);

struct AttentionParams {
  Index model_dim = 0;
  Index n_heads = 0;
  Index ff_dim = 0;
  Parameter w_q, w_k, w_v, w_o;  // [model_dim, model_dim]
  Parameter w_1;                 // [model_dim, ff_dim]
  Parameter w_2;                 // [ff_dim, model_dim]
  Parameter ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // [model_dim]

  Index head_dim() const { return model_dim / n_heads; }

  template <class F> void for_each_parameter(F&& fn) { visit(*this, fn); }
  template <class F> void for_each_parameter(F&& fn) const { visit(*this, fn); }

 private:
  template <class Self, class F> static void visit(Self& s, F& fn) {
    fn(s.w_q); fn(s.w_k); fn(s.w_v); fn(s.w_o); fn(s.w_1); fn(s.w_2);
    fn(s.ln1_gain); fn(s.ln1_bias); fn(s.ln2_gain); fn(s.ln2_bias);
  }
};

/// ff_dim is fixed at 4 * model_dim.
AttentionParams make_attention(const std::string& prefix, Index model_dim, Index n_heads,
                               std::mt19937_64& rng);

/// Keep-mask [B, H, T, T]: query i sees key j iff j <= i and j is a valid
/// step. A query always sees itself, so no row is ever empty.
Mask causal_mask(const Mask& valid, Index batch, Index steps, Index n_heads);

struct AttentionOutput {
  Tensor output;   // [B, T, d]
  Tensor weights;  // [B, H, T, T], before dropout
};

AttentionOutput causal_self_attention(Tape& tape, const AttentionParams& params, const Tensor& x,
                                      const Mask& valid, const ForwardContext& ctx = {});

/// Pre-norm block: y = x + Attn(LN1(x)); out = y + W2 relu(W1 LN2(y)).
Tensor transformer_block(Tape& tape, const AttentionParams& params, const Tensor& x,
                         const Mask& valid, const ForwardContext& ctx = {});

struct LinearHead {
  Parameter w;  // [d, 1]
  Parameter b;  // [1]

  template <class F> void for_each_parameter(F&& fn) { fn(w); fn(b); }
  template <class F> void for_each_parameter(F&& fn) const { fn(w); fn(b); }
};

LinearHead make_linear_head(const std::string& prefix, Index dim, std::mt19937_64& rng);

/// x [B, T, d] -> per-step logit [B, T]. No activation.
Tensor linear_head(Tape& tape, const LinearHead& head, const Tensor& x);

/// Two-layer perceptron d -> d -> d with a relu in between.
struct MlpParams {
  Parameter w_1, b_1, w_2, b_2;

  template <class F> void for_each_parameter(F&& fn) { fn(w_1); fn(b_1); fn(w_2); fn(b_2); }
  template <class F> void for_each_parameter(F&& fn) const { fn(w_1); fn(b_1); fn(w_2); fn(b_2); }
};

MlpParams make_mlp(const std::string& prefix, Index dim, std::mt19937_64& rng);
Tensor mlp_forward(Tape& tape, const MlpParams& params, const Tensor& x);

/// Glorot-uniform fill for a [fan_in, fan_out] matrix.
void xavier_uniform(Parameter& p, std::mt19937_64& rng);

}  // namespace tlsqkt::nn
