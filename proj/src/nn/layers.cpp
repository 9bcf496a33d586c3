// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/nn/layers.hpp"

#include <cmath>
#include <vector>

#include "tlsqkt/common/random.hpp"

namespace tlsqkt::nn {

using namespace tlsqkt::ad;

void xavier_uniform(Parameter& p, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(p.shape.at(0));
  const double fan_out = static_cast<double>(p.shape.size() > 1 ? p.shape[1] : 1);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (Index i = 0; i < p.value.size(); ++i) p.value[i] = (2.0 * uniform01(rng) - 1.0) * bound;
}

EmbeddingTable make_embedding(const std::string& name, Index n_ids, Index dim,
                              std::mt19937_64& rng) {
  EmbeddingTable table{Parameter(name, {n_ids + 1, dim})};
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (Index i = dim; i < table.weights.value.size(); ++i) table.weights.value[i] = normal(rng);
  return table;
}

Tensor embed_lookup(Tape& tape, const EmbeddingTable& table, std::span<const std::int32_t> ids,
                    const Shape& ids_shape) {
  for (std::int32_t id : ids) {
    if (id < 0 || id >= table.rows()) {
      throw IndexError("id " + std::to_string(id) + " out of range for embedding table '" +
                       table.weights.name + "' with " + std::to_string(table.rows()) + " rows");
    }
  }
  return embedding_lookup(tape.parameter(table.weights), ids, ids_shape);
}

LstmParams make_lstm(const std::string& prefix, Index input_dim, Index hidden_dim,
                     std::mt19937_64& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const Shape w{input_dim + hidden_dim, hidden_dim};
  const Shape b{hidden_dim};
  p.w_i = Parameter(prefix + ".w_i", w);
  p.w_f = Parameter(prefix + ".w_f", w);
  p.w_o = Parameter(prefix + ".w_o", w);
  p.w_g = Parameter(prefix + ".w_g", w);
  p.b_i = Parameter(prefix + ".b_i", b);
  p.b_f = Parameter(prefix + ".b_f", b);
  p.b_o = Parameter(prefix + ".b_o", b);
  p.b_g = Parameter(prefix + ".b_g", b);
  for (Parameter* m : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) xavier_uniform(*m, rng);
  p.b_f.value.setOnes();
  return p;
}

Tensor lstm_forward(Tape& tape, const LstmParams& params, const Tensor& x, const Mask& valid) {
  if (x.rank() != 3 || x.dim(2) != params.input_dim) {
    throw DimensionError("lstm_forward: expected [B, T, " + std::to_string(params.input_dim) +
                         "] input, got " + to_string(x.shape()));
  }
  const Index B = x.dim(0);
  const Index T = x.dim(1);
  const Index H = params.hidden_dim;
  const Index in = params.input_dim;
  if (static_cast<Index>(valid.size()) != B * T) {
    throw DimensionError("lstm_forward: valid mask has " + std::to_string(valid.size()) +
                         " flags for " + std::to_string(B * T) + " steps");
  }

  struct Gate {
    Tensor input_part;  // x W_x + b for every step, [B, T, H]
    Tensor recurrent;   // W_h, [H, H]
  };
  auto gate = [&](const Parameter& w, const Parameter& b) {
    Tensor full = tape.parameter(w);
    Tensor wx = slice(full, 0, 0, in);
    Tensor wh = slice(full, 0, in, in + H);
    return Gate{add(matmul(x, wx), tape.parameter(b)), wh};
  };
  const Gate gi = gate(params.w_i, params.b_i);
  const Gate gf = gate(params.w_f, params.b_f);
  const Gate go = gate(params.w_o, params.b_o);
  const Gate gg = gate(params.w_g, params.b_g);

  Tensor h = tape.constant(Vector::Zero(B * H), {B, 1, H});
  Tensor c = h;
  std::vector<Tensor> outputs;
  outputs.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    auto pre = [&](const Gate& g) { return add(slice(g.input_part, 1, t, t + 1), matmul(h, g.recurrent)); };
    Tensor i_t = sigmoid(pre(gi));
    Tensor f_t = sigmoid(pre(gf));
    Tensor o_t = sigmoid(pre(go));
    Tensor g_t = ad::tanh(pre(gg));
    Tensor c_new = add(mul(f_t, c), mul(i_t, g_t));
    Tensor h_new = mul(o_t, ad::tanh(c_new));

    bool all_valid = true;
    Mask carry(static_cast<std::size_t>(B * H));
    for (Index b = 0; b < B; ++b) {
      const std::uint8_t v = valid[static_cast<std::size_t>(b * T + t)];
      all_valid = all_valid && v;
      std::fill_n(carry.begin() + b * H, H, v);
    }
    if (all_valid) {
      c = c_new;
      h = h_new;
    } else {
      c = where(carry, c_new, c);
      h = where(carry, h_new, h);
    }
    outputs.push_back(h);
  }
  return concat(std::span<const Tensor>(outputs), 1);
}

AttentionParams make_attention(const std::string& prefix, Index model_dim, Index n_heads,
                               std::mt19937_64& rng) {
  if (n_heads < 1 || model_dim % n_heads != 0) {
    throw DimensionError("attention: model_dim " + std::to_string(model_dim) +
                         " not divisible by " + std::to_string(n_heads) + " heads");
  }
  AttentionParams p;
  p.model_dim = model_dim;
  p.n_heads = n_heads;
  p.ff_dim = 4 * model_dim;
  const Shape square{model_dim, model_dim};
  p.w_q = Parameter(prefix + ".w_q", square);
  p.w_k = Parameter(prefix + ".w_k", square);
  p.w_v = Parameter(prefix + ".w_v", square);
  p.w_o = Parameter(prefix + ".w_o", square);
  p.w_1 = Parameter(prefix + ".w_1", {model_dim, p.ff_dim});
  p.w_2 = Parameter(prefix + ".w_2", {p.ff_dim, model_dim});
  p.ln1_gain = Parameter(prefix + ".ln1_gain", {model_dim});
  p.ln1_bias = Parameter(prefix + ".ln1_bias", {model_dim});
  p.ln2_gain = Parameter(prefix + ".ln2_gain", {model_dim});
  p.ln2_bias = Parameter(prefix + ".ln2_bias", {model_dim});
  for (Parameter* m : {&p.w_q, &p.w_k, &p.w_v, &p.w_o, &p.w_1, &p.w_2}) xavier_uniform(*m, rng);
  p.ln1_gain.value.setOnes();
  p.ln2_gain.value.setOnes();
  return p;
}

Mask causal_mask(const Mask& valid, Index batch, Index steps, Index n_heads) {
  Mask keep(static_cast<std::size_t>(batch * n_heads * steps * steps), 0);
  for (Index b = 0; b < batch; ++b) {
    for (Index h = 0; h < n_heads; ++h) {
      const Index base = (b * n_heads + h) * steps * steps;
      for (Index i = 0; i < steps; ++i) {
        for (Index j = 0; j <= i; ++j) {
          const bool ok = j == i || valid[static_cast<std::size_t>(b * steps + j)];
          keep[static_cast<std::size_t>(base + i * steps + j)] = ok ? 1 : 0;
        }
      }
    }
  }
  return keep;
}

AttentionOutput causal_self_attention(Tape& tape, const AttentionParams& params, const Tensor& x,
                                      const Mask& valid, const ForwardContext& ctx) {
  if (x.rank() != 3 || x.dim(2) != params.model_dim) {
    throw DimensionError("causal_self_attention: expected [B, T, " +
                         std::to_string(params.model_dim) + "] input, got " + to_string(x.shape()));
  }
  const Index B = x.dim(0);
  const Index T = x.dim(1);
  if (static_cast<Index>(valid.size()) != B * T) {
    throw DimensionError("causal_self_attention: valid mask size mismatch");
  }
  Tensor q = matmul(x, tape.parameter(params.w_q));
  Tensor k = matmul(x, tape.parameter(params.w_k));
  Tensor v = matmul(x, tape.parameter(params.w_v));
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(params.head_dim()));
  Tensor scores = attention_scores(q, k, params.n_heads, scale_factor);
  Tensor weights = softmax_masked(scores, causal_mask(valid, B, T, params.n_heads));
  Tensor attended = ctx.drops() ? dropout(weights, ctx.dropout, *ctx.rng) : weights;
  Tensor context = attention_context(attended, v, params.n_heads);
  return {matmul(context, tape.parameter(params.w_o)), weights};
}

Tensor transformer_block(Tape& tape, const AttentionParams& params, const Tensor& x,
                         const Mask& valid, const ForwardContext& ctx) {
  Tensor normed = layer_norm(x, tape.parameter(params.ln1_gain), tape.parameter(params.ln1_bias));
  Tensor y = add(x, causal_self_attention(tape, params, normed, valid, ctx).output);
  Tensor normed2 = layer_norm(y, tape.parameter(params.ln2_gain), tape.parameter(params.ln2_bias));
  Tensor ff = matmul(relu(matmul(normed2, tape.parameter(params.w_1))), tape.parameter(params.w_2));
  if (ctx.drops()) ff = dropout(ff, ctx.dropout, *ctx.rng);
  return add(y, ff);
}

LinearHead make_linear_head(const std::string& prefix, Index dim, std::mt19937_64& rng) {
  LinearHead head{Parameter(prefix + ".w", {dim, 1}), Parameter(prefix + ".b", {1})};
  xavier_uniform(head.w, rng);
  return head;
}

Tensor linear_head(Tape& tape, const LinearHead& head, const Tensor& x) {
  Tensor logits = add(matmul(x, tape.parameter(head.w)), tape.parameter(head.b));
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  if (shape.empty()) shape.push_back(1);
  return reshape(logits, std::move(shape));
}

MlpParams make_mlp(const std::string& prefix, Index dim, std::mt19937_64& rng) {
  MlpParams p{Parameter(prefix + ".w_1", {dim, dim}), Parameter(prefix + ".b_1", {dim}),
              Parameter(prefix + ".w_2", {dim, dim}), Parameter(prefix + ".b_2", {dim})};
  xavier_uniform(p.w_1, rng);
  xavier_uniform(p.w_2, rng);
  return p;
}

Tensor mlp_forward(Tape& tape, const MlpParams& params, const Tensor& x) {
  Tensor hidden = relu(add(matmul(x, tape.parameter(params.w_1)), tape.parameter(params.b_1)));
  return add(matmul(hidden, tape.parameter(params.w_2)), tape.parameter(params.b_2));
}

}  // namespace tlsqkt::nn
