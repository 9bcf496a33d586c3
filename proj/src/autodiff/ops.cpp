// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tlsqkt::ad {
namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstStrided = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using MutStrided = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;

Tape& common_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands on different tapes");
  return a.tape();
}

Index normalize_axis(Index axis, Index rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw DimensionError(std::string(op) + ": axis out of range");
  return axis;
}

// Splits a shape around `axis` into (outer, axis length, inner) extents.
struct AxisSplit {
  Index outer = 1;
  Index length = 1;
  Index inner = 1;
};

AxisSplit split_at(const Shape& s, Index axis) {
  AxisSplit r;
  for (Index i = 0; i < axis; ++i) r.outer *= s[static_cast<std::size_t>(i)];
  r.length = s[static_cast<std::size_t>(axis)];
  for (Index i = axis + 1; i < static_cast<Index>(s.size()); ++i) {
    r.inner *= s[static_cast<std::size_t>(i)];
  }
  return r;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

enum class Broadcast { same, trailing };

Broadcast resolve_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.rank() == 1 && b.dim(0) == a.shape().back()) return Broadcast::trailing;
  throw DimensionError(std::string(op) + ": cannot combine shapes " + to_string(a.shape()) +
                       " and " + to_string(b.shape()));
}

Tensor binary(Elementwise kind, const Tensor& a, const Tensor& b) {
  const char* op = kind == Elementwise::add ? "add" : kind == Elementwise::sub ? "sub" : "mul";
  Tape& tape = common_tape(a, b, op);
  const Broadcast mode = resolve_broadcast(a, b, op);
  const Index n = a.shape().back();
  const Index rows = a.numel() / n;
  Vector out(a.numel());
  auto A = as_matrix(a.data(), rows, n);
  auto O = as_matrix(out, rows, n);
  if (mode == Broadcast::same) {
    auto B = as_matrix(b.data(), rows, n);
    switch (kind) {
      case Elementwise::add: O = A + B; break;
      case Elementwise::sub: O = A - B; break;
      default: O = A.cwiseProduct(B); break;
    }
  } else {
    auto brow = b.data().transpose();
    switch (kind) {
      case Elementwise::add: O = A.rowwise() + brow; break;
      case Elementwise::sub: O = A.rowwise() - brow; break;
      default: O = A.array().rowwise() * brow.array(); break;
    }
  }
  const NodeId ia = a.node_id();
  const NodeId ib = b.node_id();
  return tape.record(op, std::move(out), a.shape(), {ia, ib},
                     [kind, mode, rows, n, ia, ib](Tape& t, NodeId self) {
    auto G = as_matrix(*t.grad(self), rows, n);
    if (Vector* ga = t.grad_sink(ia)) {
      auto GA = as_matrix(*ga, rows, n);
      if (kind == Elementwise::mul) {
        if (mode == Broadcast::same) {
          GA += G.cwiseProduct(as_matrix(t.value(ib), rows, n));
        } else {
          GA.array() += G.array().rowwise() * t.value(ib).transpose().array();
        }
      } else {
        GA += G;
      }
    }
    if (Vector* gb = t.grad_sink(ib)) {
      if (mode == Broadcast::same) {
        auto GB = as_matrix(*gb, rows, n);
        switch (kind) {
          case Elementwise::add: GB += G; break;
          case Elementwise::sub: GB -= G; break;
          default: GB += G.cwiseProduct(as_matrix(t.value(ia), rows, n)); break;
        }
      } else {
        switch (kind) {
          case Elementwise::add: *gb += G.colwise().sum().transpose(); break;
          case Elementwise::sub: *gb -= G.colwise().sum().transpose(); break;
          default:
            *gb += G.cwiseProduct(as_matrix(t.value(ia), rows, n)).colwise().sum().transpose();
            break;
        }
      }
    }
  });
}

Tensor unary(Elementwise kind, const Tensor& a) {
  const char* op = kind == Elementwise::sigmoid ? "sigmoid"
                   : kind == Elementwise::tanh  ? "tanh"
                                                : "relu";
  Vector out(a.numel());
  const Vector& x = a.data();
  switch (kind) {
    case Elementwise::sigmoid:
      for (Index i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x[i]);
      break;
    case Elementwise::tanh:
      for (Index i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
      break;
    default:
      out = x.cwiseMax(0.0);
      break;
  }
  const NodeId ia = a.node_id();
  return a.tape().record(op, std::move(out), a.shape(), {ia}, [kind, ia](Tape& t, NodeId self) {
    Vector* ga = t.grad_sink(ia);
    if (!ga) return;
    const Vector& g = *t.grad(self);
    const Vector& y = t.value(self);
    switch (kind) {
      case Elementwise::sigmoid:
        ga->array() += g.array() * y.array() * (1.0 - y.array());
        break;
      case Elementwise::tanh:
        ga->array() += g.array() * (1.0 - y.array().square());
        break;
      default: {
        const Vector& x = t.value(ia);
        for (Index i = 0; i < g.size(); ++i) {
          if (x[i] > 0.0) (*ga)[i] += g[i];
        }
        break;
      }
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b, "matmul");
  if (b.rank() != 2 || a.shape().back() != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ for " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  const Index k = b.dim(0);
  const Index n = b.dim(1);
  const Index rows = a.numel() / k;
  Vector out(rows * n);
  as_matrix(out, rows, n).noalias() = as_matrix(a.data(), rows, k) * as_matrix(b.data(), k, n);
  Shape shape = a.shape();
  shape.back() = n;
  const NodeId ia = a.node_id();
  const NodeId ib = b.node_id();
  return tape.record("matmul", std::move(out), std::move(shape), {ia, ib},
                     [ia, ib, rows, k, n](Tape& t, NodeId self) {
    auto G = as_matrix(*t.grad(self), rows, n);
    if (Vector* ga = t.grad_sink(ia)) {
      as_matrix(*ga, rows, k).noalias() += G * as_matrix(t.value(ib), k, n).transpose();
    }
    if (Vector* gb = t.grad_sink(ib)) {
      as_matrix(*gb, k, n).noalias() += as_matrix(t.value(ia), rows, k).transpose() * G;
    }
  });
}

Tensor elementwise(Elementwise kind, const Tensor& a) {
  if (kind == Elementwise::add || kind == Elementwise::sub || kind == Elementwise::mul) {
    throw ContractError("elementwise: binary op given one operand");
  }
  return unary(kind, a);
}

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b) {
  if (kind != Elementwise::add && kind != Elementwise::sub && kind != Elementwise::mul) {
    throw ContractError("elementwise: unary op given two operands");
  }
  return binary(kind, a, b);
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(Elementwise::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(Elementwise::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(Elementwise::mul, a, b); }
Tensor sigmoid(const Tensor& a) { return unary(Elementwise::sigmoid, a); }
Tensor tanh(const Tensor& a) { return unary(Elementwise::tanh, a); }
Tensor relu(const Tensor& a) { return unary(Elementwise::relu, a); }

Tensor scale(const Tensor& a, double factor) {
  const NodeId ia = a.node_id();
  return a.tape().record("scale", a.data() * factor, a.shape(), {ia},
                         [ia, factor](Tape& t, NodeId self) {
    if (Vector* ga = t.grad_sink(ia)) *ga += *t.grad(self) * factor;
  });
}

Tensor where(const Mask& condition, const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b, "where");
  if (a.shape() != b.shape() || static_cast<Index>(condition.size()) != a.numel()) {
    throw DimensionError("where: shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()) + " with " + std::to_string(condition.size()) +
                         " flags");
  }
  Vector out(a.numel());
  const Vector& x = a.data();
  const Vector& y = b.data();
  for (Index i = 0; i < out.size(); ++i) out[i] = condition[static_cast<std::size_t>(i)] ? x[i] : y[i];
  const NodeId ia = a.node_id();
  const NodeId ib = b.node_id();
  return tape.record("where", std::move(out), a.shape(), {ia, ib},
                     [condition, ia, ib](Tape& t, NodeId self) {
    const Vector& g = *t.grad(self);
    Vector* ga = t.grad_sink(ia);
    Vector* gb = t.grad_sink(ib);
    for (Index i = 0; i < g.size(); ++i) {
      if (condition[static_cast<std::size_t>(i)]) {
        if (ga) (*ga)[i] += g[i];
      } else if (gb) {
        (*gb)[i] += g[i];
      }
    }
  });
}

Tensor softmax_masked(const Tensor& logits, const Mask& keep) {
  const Index n = logits.shape().back();
  const Index rows = logits.numel() / n;
  if (static_cast<Index>(keep.size()) != logits.numel()) {
    throw DimensionError("softmax_masked: mask has " + std::to_string(keep.size()) +
                         " flags for logits " + to_string(logits.shape()));
  }
  const Vector& x = logits.data();
  Vector out = Vector::Zero(logits.numel());
  for (Index r = 0; r < rows; ++r) {
    const Index base = r * n;
    double peak = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Index j = 0; j < n; ++j) {
      if (keep[static_cast<std::size_t>(base + j)]) {
        peak = std::max(peak, x[base + j]);
        any = true;
      }
    }
    if (!any) throw ContractError("softmax_masked: row " + std::to_string(r) + " is fully masked");
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (keep[static_cast<std::size_t>(base + j)]) {
        out[base + j] = std::exp(x[base + j] - peak);
        total += out[base + j];
      }
    }
    out.segment(base, n) /= total;
  }
  const NodeId ia = logits.node_id();
  return logits.tape().record("softmax_masked", std::move(out), logits.shape(), {ia},
                              [ia, rows, n](Tape& t, NodeId self) {
    Vector* ga = t.grad_sink(ia);
    if (!ga) return;
    auto G = as_matrix(*t.grad(self), rows, n);
    auto Y = as_matrix(t.value(self), rows, n);
    const Eigen::VectorXd dots = Y.cwiseProduct(G).rowwise().sum();
    as_matrix(*ga, rows, n).array() += Y.array() * (G.colwise() - dots).array();
  });
}

Tensor concat(std::span<const Tensor> parts, Index axis) {
  if (parts.empty()) throw ContractError("concat: no parts");
  const Tensor& first = parts.front();
  Tape& tape = first.tape();
  const Index rank = first.rank();
  axis = normalize_axis(axis, rank, "concat");
  Shape shape = first.shape();
  shape[static_cast<std::size_t>(axis)] = 0;
  std::vector<NodeId> ids;
  std::vector<Index> lengths;
  for (const Tensor& p : parts) {
    if (&p.tape() != &tape) throw ContractError("concat: parts on different tapes");
    bool ok = p.rank() == rank;
    for (Index i = 0; ok && i < rank; ++i) {
      if (i != axis && p.dim(i) != first.dim(i)) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: cannot join " + to_string(first.shape()) + " and " +
                           to_string(p.shape()) + " along axis " + std::to_string(axis));
    }
    shape[static_cast<std::size_t>(axis)] += p.dim(axis);
    ids.push_back(p.node_id());
    lengths.push_back(p.dim(axis));
  }
  const AxisSplit out_split = split_at(shape, axis);
  const Index inner = out_split.inner;
  const Index outer = out_split.outer;
  const Index total = out_split.length;
  Vector out(numel(shape));
  Index offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Vector& v = parts[p].data();
    const Index chunk = lengths[p] * inner;
    for (Index o = 0; o < outer; ++o) {
      out.segment(o * total * inner + offset * inner, chunk) = v.segment(o * chunk, chunk);
    }
    offset += lengths[p];
  }
  return tape.record("concat", std::move(out), std::move(shape), ids,
                     [ids, lengths, outer, inner, total](Tape& t, NodeId self) {
    const Vector& g = *t.grad(self);
    Index off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      const Index chunk = lengths[p] * inner;
      if (Vector* gp = t.grad_sink(ids[p])) {
        for (Index o = 0; o < outer; ++o) {
          gp->segment(o * chunk, chunk) += g.segment(o * total * inner + off * inner, chunk);
        }
      }
      off += lengths[p];
    }
  });
}

Tensor concat(std::initializer_list<Tensor> parts, Index axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, Index axis, Index begin, Index end) {
  axis = normalize_axis(axis, a.rank(), "slice");
  const AxisSplit s = split_at(a.shape(), axis);
  if (begin < 0 || end > s.length || begin >= end) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis of length " + std::to_string(s.length));
  }
  const Index len = end - begin;
  Shape shape = a.shape();
  shape[static_cast<std::size_t>(axis)] = len;
  Vector out(s.outer * len * s.inner);
  const Vector& v = a.data();
  for (Index o = 0; o < s.outer; ++o) {
    out.segment(o * len * s.inner, len * s.inner) =
        v.segment((o * s.length + begin) * s.inner, len * s.inner);
  }
  const NodeId ia = a.node_id();
  return a.tape().record("slice", std::move(out), std::move(shape), {ia},
                         [ia, s, begin, len](Tape& t, NodeId self) {
    Vector* ga = t.grad_sink(ia);
    if (!ga) return;
    const Vector& g = *t.grad(self);
    for (Index o = 0; o < s.outer; ++o) {
      ga->segment((o * s.length + begin) * s.inner, len * s.inner) +=
          g.segment(o * len * s.inner, len * s.inner);
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_shape(shape);
  if (numel(shape) != a.numel()) {
    throw DimensionError("reshape: " + to_string(a.shape()) + " to " + to_string(shape));
  }
  const NodeId ia = a.node_id();
  return a.tape().record("reshape", a.data(), std::move(shape), {ia}, [ia](Tape& t, NodeId self) {
    if (Vector* ga = t.grad_sink(ia)) *ga += *t.grad(self);
  });
}

Tensor sum(const Tensor& a) {
  Vector out(1);
  out[0] = a.data().sum();
  const NodeId ia = a.node_id();
  return a.tape().record("sum", std::move(out), {1}, {ia}, [ia](Tape& t, NodeId self) {
    if (Vector* ga = t.grad_sink(ia)) ga->array() += (*t.grad(self))[0];
  });
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  Tape& tape = common_tape(x, gain, "layer_norm");
  const Index d = x.shape().back();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(d) + "], got " +
                         to_string(gain.shape()) + " and " + to_string(bias.shape()));
  }
  const Index rows = x.numel() / d;
  auto X = as_matrix(x.data(), rows, d);
  Vector xhat(x.numel());
  Vector rstd(rows);
  auto XH = as_matrix(xhat, rows, d);
  for (Index r = 0; r < rows; ++r) {
    const double mu = X.row(r).mean();
    const double var = (X.row(r).array() - mu).square().mean();
    rstd[r] = 1.0 / std::sqrt(var + eps);
    XH.row(r) = (X.row(r).array() - mu) * rstd[r];
  }
  Vector out(x.numel());
  as_matrix(out, rows, d) =
      (XH.array().rowwise() * gain.data().transpose().array()).rowwise() +
      bias.data().transpose().array();
  const NodeId ix = x.node_id();
  const NodeId ig = gain.node_id();
  const NodeId ib = bias.node_id();
  return tape.record("layer_norm", std::move(out), x.shape(), {ix, ig, ib},
                     [ix, ig, ib, rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](
                         Tape& t, NodeId self) {
    auto G = as_matrix(*t.grad(self), rows, d);
    auto XH = as_matrix(xhat, rows, d);
    if (Vector* gg = t.grad_sink(ig)) *gg += G.cwiseProduct(XH).colwise().sum().transpose();
    if (Vector* gb = t.grad_sink(ib)) *gb += G.colwise().sum().transpose();
    if (Vector* gx = t.grad_sink(ix)) {
      auto GX = as_matrix(*gx, rows, d);
      const Eigen::RowVectorXd gain_row = t.value(ig).transpose();
      for (Index r = 0; r < rows; ++r) {
        const Eigen::RowVectorXd dxhat = G.row(r).cwiseProduct(gain_row);
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(XH.row(r)).mean();
        GX.row(r).array() += rstd[r] * (dxhat.array() - m1 - XH.row(r).array() * m2);
      }
    }
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids, Shape ids_shape) {
  if (table.rank() != 2) throw DimensionError("embedding_lookup: table must be rank 2");
  check_shape(ids_shape);
  if (static_cast<Index>(ids.size()) != numel(ids_shape)) {
    throw DimensionError("embedding_lookup: " + std::to_string(ids.size()) + " ids for shape " +
                         to_string(ids_shape));
  }
  const Index rows = table.dim(0);
  const Index d = table.dim(1);
  std::vector<std::int32_t> index(ids.begin(), ids.end());
  for (std::int32_t id : index) {
    if (id < 0 || id >= rows) {
      throw IndexError("embedding_lookup: id " + std::to_string(id) + " out of range for table of " +
                       std::to_string(rows) + " rows");
    }
  }
  auto W = as_matrix(table.data(), rows, d);
  Vector out(static_cast<Index>(index.size()) * d);
  auto O = as_matrix(out, static_cast<Index>(index.size()), d);
  // Id 0 is padding: a constant zero row, so it neither reads nor trains row 0.
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] == 0) {
      O.row(static_cast<Index>(i)).setZero();
    } else {
      O.row(static_cast<Index>(i)) = W.row(index[i]);
    }
  }
  Shape shape = std::move(ids_shape);
  shape.push_back(d);
  const NodeId it = table.node_id();
  return table.tape().record("embedding_lookup", std::move(out), std::move(shape), {it},
                             [it, rows, d, index = std::move(index)](Tape& t, NodeId self) {
    Vector* gt = t.grad_sink(it);
    if (!gt) return;
    auto G = as_matrix(*t.grad(self), static_cast<Index>(index.size()), d);
    auto GT = as_matrix(*gt, rows, d);
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (index[i] != 0) GT.row(index[i]) += G.row(static_cast<Index>(i));
    }
  });
}

Tensor gather_last(const Tensor& a, std::span<const std::int32_t> index) {
  if (a.rank() < 2) throw DimensionError("gather_last: input must have rank >= 2");
  const Index k = a.shape().back();
  const Index rows = a.numel() / k;
  if (static_cast<Index>(index.size()) != rows) {
    throw DimensionError("gather_last: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(rows) + " rows");
  }
  std::vector<std::int32_t> idx(index.begin(), index.end());
  Vector out(rows);
  for (Index r = 0; r < rows; ++r) {
    const std::int32_t c = idx[static_cast<std::size_t>(r)];
    if (c < 0 || c >= k) {
      throw IndexError("gather_last: index " + std::to_string(c) + " out of range [0, " +
                       std::to_string(k) + ")");
    }
    out[r] = a.data()[r * k + c];
  }
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  const NodeId ia = a.node_id();
  return a.tape().record("gather_last", std::move(out), std::move(shape), {ia},
                         [ia, k, idx = std::move(idx)](Tape& t, NodeId self) {
    Vector* ga = t.grad_sink(ia);
    if (!ga) return;
    const Vector& g = *t.grad(self);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      (*ga)[static_cast<Index>(r) * k + idx[r]] += g[static_cast<Index>(r)];
    }
  });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  Vector factor(a.numel());
  for (Index i = 0; i < factor.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    factor[i] = u < rate ? 0.0 : keep_scale;
  }
  Vector out = a.data().cwiseProduct(factor);
  const NodeId ia = a.node_id();
  return a.tape().record("dropout", std::move(out), a.shape(), {ia},
                         [ia, factor = std::move(factor)](Tape& t, NodeId self) {
    if (Vector* ga = t.grad_sink(ia)) *ga += t.grad(self)->cwiseProduct(factor);
  });
}

Tensor attention_scores(const Tensor& q, const Tensor& k, Index n_heads, double scale_factor) {
  Tape& tape = common_tape(q, k, "attention_scores");
  if (q.rank() != 3 || q.shape() != k.shape()) {
    throw DimensionError("attention_scores: q and k must share a [B, T, d] shape, got " +
                         to_string(q.shape()) + " and " + to_string(k.shape()));
  }
  const Index B = q.dim(0), T = q.dim(1), d = q.dim(2);
  if (n_heads < 1 || d % n_heads != 0) {
    throw DimensionError("attention_scores: width " + std::to_string(d) +
                         " not divisible by " + std::to_string(n_heads) + " heads");
  }
  const Index dh = d / n_heads;
  Vector out(B * n_heads * T * T);
  const double* qd = q.data().data();
  const double* kd = k.data().data();
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < n_heads; ++h) {
      ConstStrided Q(qd + b * T * d + h * dh, T, dh, Eigen::OuterStride<>(d));
      ConstStrided K(kd + b * T * d + h * dh, T, dh, Eigen::OuterStride<>(d));
      MutMap S(out.data() + (b * n_heads + h) * T * T, T, T);
      S.noalias() = scale_factor * (Q * K.transpose());
    }
  }
  const NodeId iq = q.node_id();
  const NodeId ik = k.node_id();
  return tape.record("attention_scores", std::move(out), {B, n_heads, T, T}, {iq, ik},
                     [iq, ik, B, T, d, dh, n_heads, scale_factor](Tape& t, NodeId self) {
    const double* g = t.grad(self)->data();
    Vector* gq = t.grad_sink(iq);
    Vector* gk = t.grad_sink(ik);
    const double* qv = t.value(iq).data();
    const double* kv = t.value(ik).data();
    for (Index b = 0; b < B; ++b) {
      for (Index h = 0; h < n_heads; ++h) {
        ConstMap G(g + (b * n_heads + h) * T * T, T, T);
        const Index off = b * T * d + h * dh;
        if (gq) {
          MutStrided GQ(gq->data() + off, T, dh, Eigen::OuterStride<>(d));
          ConstStrided K(kv + off, T, dh, Eigen::OuterStride<>(d));
          GQ.noalias() += scale_factor * (G * K);
        }
        if (gk) {
          MutStrided GK(gk->data() + off, T, dh, Eigen::OuterStride<>(d));
          ConstStrided Q(qv + off, T, dh, Eigen::OuterStride<>(d));
          GK.noalias() += scale_factor * (G.transpose() * Q);
        }
      }
    }
  });
}

Tensor attention_context(const Tensor& weights, const Tensor& v, Index n_heads) {
  Tape& tape = common_tape(weights, v, "attention_context");
  if (v.rank() != 3 || weights.rank() != 4) {
    throw DimensionError("attention_context: expected [B, H, T, T] weights and [B, T, d] values");
  }
  const Index B = v.dim(0), T = v.dim(1), d = v.dim(2);
  if (weights.shape() != Shape{B, n_heads, T, T} || d % n_heads != 0) {
    throw DimensionError("attention_context: weights " + to_string(weights.shape()) +
                         " incompatible with values " + to_string(v.shape()));
  }
  const Index dh = d / n_heads;
  Vector out(B * T * d);
  const double* wd = weights.data().data();
  const double* vd = v.data().data();
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < n_heads; ++h) {
      ConstMap W(wd + (b * n_heads + h) * T * T, T, T);
      ConstStrided V(vd + b * T * d + h * dh, T, dh, Eigen::OuterStride<>(d));
      MutStrided O(out.data() + b * T * d + h * dh, T, dh, Eigen::OuterStride<>(d));
      O.noalias() = W * V;
    }
  }
  const NodeId iw = weights.node_id();
  const NodeId iv = v.node_id();
  return tape.record("attention_context", std::move(out), {B, T, d}, {iw, iv},
                     [iw, iv, B, T, d, dh, n_heads](Tape& t, NodeId self) {
    const double* g = t.grad(self)->data();
    Vector* gw = t.grad_sink(iw);
    Vector* gv = t.grad_sink(iv);
    const double* wv = t.value(iw).data();
    const double* vv = t.value(iv).data();
    for (Index b = 0; b < B; ++b) {
      for (Index h = 0; h < n_heads; ++h) {
        const Index off = b * T * d + h * dh;
        ConstStrided G(g + off, T, dh, Eigen::OuterStride<>(d));
        if (gw) {
          MutMap GW(gw->data() + (b * n_heads + h) * T * T, T, T);
          ConstStrided V(vv + off, T, dh, Eigen::OuterStride<>(d));
          GW.noalias() += G * V.transpose();
        }
        if (gv) {
          MutStrided GV(gv->data() + off, T, dh, Eigen::OuterStride<>(d));
          ConstMap W(wv + (b * n_heads + h) * T * T, T, T);
          GV.noalias() += W.transpose() * G;
        }
      }
    }
  });
}

}  // namespace tlsqkt::ad
