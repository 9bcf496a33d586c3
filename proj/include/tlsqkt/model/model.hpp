// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Dual-channel literacy tracing model with three scoring channels:
//
//   question:     e_t = [q_t | l_t | r_t] + pos_t,  a_t = LSTM(e_t),  alpha_t = head(TF(a_t))
//   ability:      m_t = [l_t | r_t] + pos_t,        b_t = LSTM(m_t),  beta_t  = head(TF(b_t))
//   application:  y_{t+1} = P [b_t | q_{t+1} | l_{t+1}],               gamma   = head(TF(y))
//
//   p(r_{t+1} = 1) = sigmoid(w . (alpha_t, beta_t, gamma_{t+1}) + c)
//
// All attention is causal, so every score at position t depends on steps <= t
// (plus the ids of step t + 1 in the application channel).

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tlsqkt/data/batching.hpp"
#include "tlsqkt/nn/layers.hpp"

namespace tlsqkt::model {

using ad::Index;
using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using nn::ForwardContext;

enum class VariantKind { full, wo_output, wo_head, wo_add, dkt_baseline };

std::string to_string(VariantKind kind);
/// Accepts the names produced by to_string; throws std::invalid_argument.
VariantKind parse_variant(const std::string& name);
const std::vector<VariantKind>& all_variants();

struct ModelDims {
  Index n_questions = 1;
  Index n_kcs = 1;
  Index n_literacy = 1;
  Index max_seq_len = 200;
  Index embed_dim = 64;
  Index hidden_dim = 64;
  Index model_dim = 64;
  Index n_heads = 4;

  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

struct TlsqktParams {
  nn::EmbeddingTable q_table, l_table, r_table, pos_table;
  nn::LstmParams question_lstm, ability_lstm;
  // Absent in the wo_output variant.
  std::optional<nn::AttentionParams> question_tf, ability_tf, application_tf;
  // Present only in the wo_add variant.
  std::optional<nn::MlpParams> question_mlp, ability_mlp, application_mlp;
  nn::LinearHead q_head, a_head, app_head;
  Parameter app_proj;   // [hidden + 2 * embed, model_dim]
  Parameter combine_w;  // [3]
  Parameter combine_b;  // [1]

  template <class F> void for_each_parameter(F&& fn) { visit(*this, fn); }
  template <class F> void for_each_parameter(F&& fn) const { visit(*this, fn); }

 private:
  template <class Self, class F> static void visit(Self& s, F& fn) {
    s.q_table.for_each_parameter(fn);
    s.l_table.for_each_parameter(fn);
    s.r_table.for_each_parameter(fn);
    s.pos_table.for_each_parameter(fn);
    s.question_lstm.for_each_parameter(fn);
    s.ability_lstm.for_each_parameter(fn);
    for (auto* mlp : {&s.question_mlp, &s.ability_mlp, &s.application_mlp}) {
      if (*mlp) (*mlp)->for_each_parameter(fn);
    }
    for (auto* tf : {&s.question_tf, &s.ability_tf, &s.application_tf}) {
      if (*tf) (*tf)->for_each_parameter(fn);
    }
    s.q_head.for_each_parameter(fn);
    s.a_head.for_each_parameter(fn);
    s.app_head.for_each_parameter(fn);
    fn(s.app_proj);
    fn(s.combine_w);
    fn(s.combine_b);
  }
};

struct DktParams {
  nn::EmbeddingTable input_table;  // id = kc + n_kcs * response
  nn::LstmParams lstm;
  Parameter out_w;  // [hidden, n_kcs + 1]; column c scores kc c
  Parameter out_b;  // [n_kcs + 1]

  template <class F> void for_each_parameter(F&& fn) { visit(*this, fn); }
  template <class F> void for_each_parameter(F&& fn) const { visit(*this, fn); }

 private:
  template <class Self, class F> static void visit(Self& s, F& fn) {
    s.input_table.for_each_parameter(fn);
    s.lstm.for_each_parameter(fn);
    fn(s.out_w);
    fn(s.out_b);
  }
};

class Model {
 public:
  /// Fresh initialisation from the "init" stream of `seed`.
  static Model create(VariantKind kind, const ModelDims& dims, std::uint64_t seed);

  VariantKind variant() const { return kind_; }
  const ModelDims& dims() const { return dims_; }
  bool is_dkt() const { return kind_ == VariantKind::dkt_baseline; }

  const TlsqktParams& tlsqkt() const { return std::get<TlsqktParams>(params_); }
  TlsqktParams& tlsqkt() { return std::get<TlsqktParams>(params_); }
  const DktParams& dkt() const { return std::get<DktParams>(params_); }
  DktParams& dkt() { return std::get<DktParams>(params_); }

  template <class F> void for_each_parameter(F&& fn) {
    std::visit([&](auto& p) { p.for_each_parameter(fn); }, params_);
  }
  template <class F> void for_each_parameter(F&& fn) const {
    std::visit([&](const auto& p) { p.for_each_parameter(fn); }, params_);
  }

  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;
  /// Sets every parameter to zero.
  void zero();

 private:
  Model(VariantKind kind, ModelDims dims) : kind_(kind), dims_(dims) {}

  VariantKind kind_;
  ModelDims dims_;
  std::variant<TlsqktParams, DktParams> params_;
};

struct TraceOutput {
  Tensor probs;                         // [B, T], prediction for step t + 1
  std::optional<Tensor> alpha, beta, gamma;  // [B, T] channel logits (absent for DKT)
  Tensor literacy_states;               // [B, T, hidden]: b_t (DKT: its LSTM state)
};

Tensor embed_question_channel(Tape& tape, const TlsqktParams& params, const data::Batch& batch);
Tensor embed_literacy_channel(Tape& tape, const TlsqktParams& params, const data::Batch& batch);
/// `ability_states` is the ability LSTM output b; ids come from batch.q_next / l_next.
Tensor embed_application_channel(Tape& tape, const TlsqktParams& params,
                                 const Tensor& ability_states, const data::Batch& batch);

/// Throws ad::ContractError on a malformed batch.
TraceOutput forward(Tape& tape, const Model& model, const data::Batch& batch,
                    const ForwardContext& ctx = {});

Tensor dkt_forward(Tape& tape, const DktParams& params, const data::Batch& batch,
                   Tensor* hidden_states = nullptr);

}  // namespace tlsqkt::model
