// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/autodiff/tape.hpp"

#include <cstring>
#include <sstream>

namespace tlsqkt::ad {

Index numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (Index d : shape) {
    if (d < 1) throw DimensionError("tensor dimensions must be >= 1, got " + to_string(shape));
  }
}

Parameter::Parameter(std::string n, Shape s)
    : name(std::move(n)), shape(std::move(s)), value(Vector::Zero(numel(shape))) {
  check_shape(shape);
}

Tape& Tensor::tape() const {
  if (!tape_) throw ContractError("tensor is not attached to a tape");
  return *tape_;
}
const Shape& Tensor::shape() const { return tape().node(id_).shape; }
Index Tensor::dim(Index axis) const {
  const Shape& s = shape();
  if (axis < 0) axis += static_cast<Index>(s.size());
  if (axis < 0 || axis >= static_cast<Index>(s.size())) {
    throw DimensionError("axis out of range for shape " + to_string(s));
  }
  return s[static_cast<std::size_t>(axis)];
}
Index Tensor::numel() const { return ad::numel(shape()); }
const Vector& Tensor::data() const { return tape().value(id_); }
bool Tensor::requires_grad() const { return tape().node(id_).requires_grad; }
const Vector* Tensor::grad() const { return tape().grad(id_); }
double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on non-scalar tensor " + to_string(shape()));
  return data()[0];
}

Tensor Tape::constant(Vector values, Shape shape) {
  check_shape(shape);
  if (values.size() != numel(shape)) {
    throw DimensionError("data length " + std::to_string(values.size()) +
                         " does not match shape " + to_string(shape));
  }
  Node n;
  n.shape = std::move(shape);
  n.owned = std::move(values);
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return {this, nodes_.size() - 1};
}

Tensor Tape::variable(Vector values, Shape shape) {
  Tensor t = constant(std::move(values), std::move(shape));
  nodes_.back().requires_grad = record_gradients_;
  return t;
}

Tensor Tape::parameter(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  if (p.value.size() != numel(p.shape)) {
    throw DimensionError("parameter '" + p.name + "' has " + std::to_string(p.value.size()) +
                         " values for shape " + to_string(p.shape));
  }
  Node n;
  n.op = "parameter";
  n.shape = p.shape;
  n.external = &p.value;
  n.requires_grad = record_gradients_;
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Tensor Tape::record(const char* op, Vector value, Shape shape, std::vector<NodeId> inputs,
                    BackwardFn backward) {
  check_shape(shape);
  if (value.size() != numel(shape)) {
    throw DimensionError(std::string(op) + ": produced " + std::to_string(value.size()) +
                         " values for shape " + to_string(shape));
  }
  bool needs = false;
  for (NodeId in : inputs) {
    if (in >= nodes_.size()) throw ContractError(std::string(op) + ": input from a foreign tape");
    needs = needs || nodes_[in].requires_grad;
  }
  Node n;
  n.op = op;
  n.shape = std::move(shape);
  n.owned = std::move(value);
  n.requires_grad = needs && record_gradients_;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return {this, nodes_.size() - 1};
}

const Vector* Tape::grad(NodeId id) const {
  const Vector& g = grads_.at(id);
  return g.size() == 0 ? nullptr : &g;
}

Vector* Tape::grad_sink(NodeId id) {
  if (!nodes_[id].requires_grad) return nullptr;
  Vector& g = grads_[id];
  if (g.size() == 0) g = Vector::Zero(nodes_[id].value().size());
  return &g;
}

void Tape::backward(const Tensor& loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to a different tape");
  const NodeId root = loss.node_id();
  if (numel(nodes_[root].shape) != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        to_string(nodes_[root].shape));
  }
  if (!nodes_[root].requires_grad) return;
  grads_[root] = Vector::Ones(1);
  for (NodeId id = root + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || grads_[id].size() == 0) continue;
    n.backward(*this, id);
  }
}

Vector Tape::gradient(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end() || grads_[it->second].size() == 0) {
    return Vector::Zero(p.value.size());
  }
  return grads_[it->second];
}

std::size_t Tape::count_ops(const std::string& op) const {
  std::size_t n = 0;
  for (const Node& node : nodes_) n += (op == node.op) ? 1 : 0;
  return n;
}

}  // namespace tlsqkt::ad
