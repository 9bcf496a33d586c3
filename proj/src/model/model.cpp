// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/model/model.hpp"

#include <stdexcept>

#include "tlsqkt/common/random.hpp"

namespace tlsqkt::model {

using namespace tlsqkt::ad;
using data::Batch;

std::string to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::full: return "full";
    case VariantKind::wo_output: return "wo_output";
    case VariantKind::wo_head: return "wo_head";
    case VariantKind::wo_add: return "wo_add";
    case VariantKind::dkt_baseline: return "dkt_baseline";
  }
  return "unknown";
}

VariantKind parse_variant(const std::string& name) {
  for (VariantKind k : all_variants()) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected full, wo_output, wo_head, wo_add or dkt_baseline)");
}

const std::vector<VariantKind>& all_variants() {
  static const std::vector<VariantKind> kinds = {VariantKind::full, VariantKind::wo_output,
                                                 VariantKind::wo_head, VariantKind::wo_add,
                                                 VariantKind::dkt_baseline};
  return kinds;
}

void ModelDims::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be >= 1");
  };
  positive(n_questions, "n_questions");
  positive(n_kcs, "n_kcs");
  positive(n_literacy, "n_literacy");
  positive(embed_dim, "embed_dim");
  positive(hidden_dim, "hidden_dim");
  positive(model_dim, "model_dim");
  positive(n_heads, "n_heads");
  if (max_seq_len < 2) throw std::invalid_argument("max_seq_len must be >= 2");
  if (model_dim != hidden_dim) {
    throw std::invalid_argument("model_dim must equal hidden_dim (transformer blocks read LSTM states)");
  }
  if (model_dim % n_heads != 0) throw std::invalid_argument("model_dim must be divisible by n_heads");
}

Model Model::create(VariantKind kind, const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Model model(kind, dims);
  auto rng = make_stream(seed, "init");
  const Index d = dims.embed_dim;
  const Index h = dims.hidden_dim;

  if (kind == VariantKind::dkt_baseline) {
    DktParams p;
    p.input_table = nn::make_embedding("dkt.input_table", 2 * dims.n_kcs, d, rng);
    p.lstm = nn::make_lstm("dkt.lstm", d, h, rng);
    p.out_w = Parameter("dkt.out_w", {h, dims.n_kcs + 1});
    p.out_b = Parameter("dkt.out_b", {dims.n_kcs + 1});
    nn::xavier_uniform(p.out_w, rng);
    model.params_ = std::move(p);
    return model;
  }

  TlsqktParams p;
  p.q_table = nn::make_embedding("q_table", dims.n_questions, d, rng);
  p.l_table = nn::make_embedding("l_table", dims.n_literacy, d, rng);
  p.r_table = nn::make_embedding("r_table", 2, d, rng);
  p.pos_table = nn::make_embedding("pos_table", dims.max_seq_len, 3 * d, rng);
  p.question_lstm = nn::make_lstm("question_lstm", 3 * d, h, rng);
  p.ability_lstm = nn::make_lstm("ability_lstm", 2 * d, h, rng);
  p.app_proj = Parameter("app_proj", {h + 2 * d, dims.model_dim});
  nn::xavier_uniform(p.app_proj, rng);

  if (kind == VariantKind::wo_add) {
    p.question_mlp = nn::make_mlp("question_mlp", dims.model_dim, rng);
    p.ability_mlp = nn::make_mlp("ability_mlp", dims.model_dim, rng);
    p.application_mlp = nn::make_mlp("application_mlp", dims.model_dim, rng);
  }
  if (kind != VariantKind::wo_output) {
    const Index heads = kind == VariantKind::wo_head ? 1 : dims.n_heads;
    p.question_tf = nn::make_attention("question_tf", dims.model_dim, heads, rng);
    p.ability_tf = nn::make_attention("ability_tf", dims.model_dim, heads, rng);
    p.application_tf = nn::make_attention("application_tf", dims.model_dim, heads, rng);
  }
  p.q_head = nn::make_linear_head("q_head", dims.model_dim, rng);
  p.a_head = nn::make_linear_head("a_head", dims.model_dim, rng);
  p.app_head = nn::make_linear_head("app_head", dims.model_dim, rng);
  p.combine_w = Parameter("combine_w", {3});
  p.combine_w.value.setConstant(1.0 / 3.0);
  p.combine_b = Parameter("combine_b", {1});
  model.params_ = std::move(p);
  return model;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for_each_parameter([&](Parameter& p) { out.push_back(&p); });
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for_each_parameter([&](const Parameter& p) { n += static_cast<std::size_t>(p.size()); });
  return n;
}

void Model::zero() {
  for_each_parameter([](Parameter& p) { p.value.setZero(); });
}

namespace {

Shape grid(const Batch& batch) { return {batch.batch_size, batch.steps}; }

// Response id: 1 + r on real steps, padding 0.
std::vector<std::int32_t> response_ids(const Batch& batch) {
  std::vector<std::int32_t> ids(batch.responses.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (batch.step_mask[i]) ids[i] = batch.responses[i] + 1;
  }
  return ids;
}

Tensor channel_scores(Tape& tape, const std::optional<nn::MlpParams>& mlp,
                      const std::optional<nn::AttentionParams>& tf, const nn::LinearHead& head,
                      Tensor states, const Batch& batch, const ForwardContext& ctx) {
  if (mlp) states = nn::mlp_forward(tape, *mlp, states);
  if (tf) states = nn::transformer_block(tape, *tf, states, batch.step_mask, ctx);
  return nn::linear_head(tape, head, states);
}

}  // namespace

Tensor embed_question_channel(Tape& tape, const TlsqktParams& params, const Batch& batch) {
  const Shape ids = grid(batch);
  const auto r_ids = response_ids(batch);
  Tensor joined = concat({nn::embed_lookup(tape, params.q_table, batch.q_ids, ids),
                          nn::embed_lookup(tape, params.l_table, batch.l_ids, ids),
                          nn::embed_lookup(tape, params.r_table, r_ids, ids)},
                         2);
  return add(joined, nn::embed_lookup(tape, params.pos_table, batch.positions, ids));
}

Tensor embed_literacy_channel(Tape& tape, const TlsqktParams& params, const Batch& batch) {
  const Shape ids = grid(batch);
  const auto r_ids = response_ids(batch);
  const Index width = 2 * params.l_table.dim();
  Tensor joined = concat({nn::embed_lookup(tape, params.l_table, batch.l_ids, ids),
                          nn::embed_lookup(tape, params.r_table, r_ids, ids)},
                         2);
  Tensor pos = nn::embed_lookup(tape, params.pos_table, batch.positions, ids);
  return add(joined, slice(pos, 2, 0, width));
}

Tensor embed_application_channel(Tape& tape, const TlsqktParams& params,
                                 const Tensor& ability_states, const Batch& batch) {
  const Shape ids = grid(batch);
  Tensor joined = concat({ability_states, nn::embed_lookup(tape, params.q_table, batch.q_next, ids),
                          nn::embed_lookup(tape, params.l_table, batch.l_next, ids)},
                         2);
  return matmul(joined, tape.parameter(params.app_proj));
}

Tensor dkt_forward(Tape& tape, const DktParams& params, const Batch& batch, Tensor* hidden_states) {
  const Index n_kcs = params.out_w.shape.at(1) - 1;
  std::vector<std::int32_t> input(batch.kc_ids.size(), 0);
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (batch.step_mask[i]) {
      input[i] = batch.kc_ids[i] + static_cast<std::int32_t>(n_kcs) * batch.responses[i];
    }
  }
  Tensor x = nn::embed_lookup(tape, params.input_table, input, grid(batch));
  Tensor h = nn::lstm_forward(tape, params.lstm, x, batch.step_mask);
  if (hidden_states) *hidden_states = h;
  Tensor logits = add(matmul(h, tape.parameter(params.out_w)), tape.parameter(params.out_b));
  return sigmoid(gather_last(logits, batch.kc_next));
}

TraceOutput forward(Tape& tape, const Model& model, const Batch& batch, const ForwardContext& ctx) {
  try {
    batch.validate();
  } catch (const std::logic_error& e) {
    throw ContractError(e.what());
  }
  if (batch.steps > model.dims().max_seq_len) {
    throw ContractError("batch has " + std::to_string(batch.steps) + " steps, model allows " +
                        std::to_string(model.dims().max_seq_len));
  }

  TraceOutput out;
  if (model.is_dkt()) {
    out.probs = dkt_forward(tape, model.dkt(), batch, &out.literacy_states);
    return out;
  }

  const TlsqktParams& p = model.tlsqkt();
  const Index B = batch.batch_size;
  const Index T = batch.steps;

  Tensor a = nn::lstm_forward(tape, p.question_lstm, embed_question_channel(tape, p, batch),
                              batch.step_mask);
  Tensor alpha = channel_scores(tape, p.question_mlp, p.question_tf, p.q_head, a, batch, ctx);

  Tensor b = nn::lstm_forward(tape, p.ability_lstm, embed_literacy_channel(tape, p, batch),
                              batch.step_mask);
  Tensor beta = channel_scores(tape, p.ability_mlp, p.ability_tf, p.a_head, b, batch, ctx);

  Tensor y = embed_application_channel(tape, p, b, batch);
  Tensor gamma = channel_scores(tape, p.application_mlp, p.application_tf, p.app_head, y, batch, ctx);

  Tensor stacked = concat({reshape(alpha, {B, T, 1}), reshape(beta, {B, T, 1}),
                           reshape(gamma, {B, T, 1})},
                          2);
  Tensor logit = add(matmul(stacked, reshape(tape.parameter(p.combine_w), {3, 1})),
                     tape.parameter(p.combine_b));
  out.probs = sigmoid(reshape(logit, {B, T}));
  out.alpha = alpha;
  out.beta = beta;
  out.gamma = gamma;
  out.literacy_states = b;
  return out;
}

}  // namespace tlsqkt::model
