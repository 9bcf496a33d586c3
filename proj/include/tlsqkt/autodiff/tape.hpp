// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense float64 tensors recorded on an append-only reverse-mode tape.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace tlsqkt::ad {

using Index = std::ptrdiff_t;
using Shape = std::vector<Index>;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using NodeId = std::size_t;

/// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation's precondition is violated (non-scalar loss,
/// fully masked softmax row, foreign tape, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised on out-of-range ids in lookups.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);
void check_shape(const Shape& shape);

/// Persistent trainable storage. Lives outside any tape; a tape references it
/// read-only during the forward pass and exposes its gradient afterwards.
struct Parameter {
  std::string name;
  Shape shape;
  Vector value;

  Parameter() = default;
  Parameter(std::string name, Shape shape);
  Index size() const { return value.size(); }
};

class Tape;

using BackwardFn = std::function<void(Tape&, NodeId)>;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const;
  NodeId node_id() const { return id_; }
  const Shape& shape() const;
  Index dim(Index axis) const;
  Index rank() const { return static_cast<Index>(shape().size()); }
  Index numel() const;
  const Vector& data() const;
  bool requires_grad() const;
  /// Gradient after backward(); nullptr when the node was never reached.
  const Vector* grad() const;
  double item() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

class Tape {
 public:
  struct Node {
    const char* op = "leaf";
    Shape shape;
    Vector owned;
    const Vector* external = nullptr;
    bool requires_grad = false;
    std::vector<NodeId> inputs;
    BackwardFn backward;

    const Vector& value() const { return external ? *external : owned; }
  };

  /// With record_gradients=false every node is a constant: parameters are
  /// read but no backward closures are kept (evaluation mode).
  explicit Tape(bool record_gradients = true) : record_gradients_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records_gradients() const { return record_gradients_; }

  Tensor constant(Vector values, Shape shape);
  /// Leaf that requires grad (ignored in evaluation mode).
  Tensor variable(Vector values, Shape shape);
  /// Leaf backed by a parameter; one node per parameter per tape.
  Tensor parameter(const Parameter& p);

  /// Appends an op node. `backward` is dropped when no input requires grad.
  Tensor record(const char* op, Vector value, Shape shape, std::vector<NodeId> inputs,
                BackwardFn backward);

  /// Reverse sweep from a scalar loss in exact reverse append order.
  void backward(const Tensor& loss);

  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Vector& value(NodeId id) const { return nodes_[id].value(); }
  /// Gradient of a node, nullptr if not reached by backward.
  const Vector* grad(NodeId id) const;
  /// Accumulator for an input's gradient, nullptr if it does not require grad.
  Vector* grad_sink(NodeId id);

  /// Gradient w.r.t. a parameter registered on this tape (zeros if unused).
  Vector gradient(const Parameter& p) const;
  bool uses(const Parameter& p) const { return param_nodes_.count(&p) != 0; }

  std::size_t size() const { return nodes_.size(); }
  std::size_t count_ops(const std::string& op) const;

 private:
  bool record_gradients_;
  std::vector<Node> nodes_;
  std::vector<Vector> grads_;
  std::unordered_map<const Parameter*, NodeId> param_nodes_;
};

/// Row-major matrix views over flat storage.
inline Eigen::Map<const RowMatrix> as_matrix(const Vector& v, Index rows, Index cols) {
  return {v.data(), rows, cols};
}
inline Eigen::Map<RowMatrix> as_matrix(Vector& v, Index rows, Index cols) {
  return {v.data(), rows, cols};
}

}  // namespace tlsqkt::ad
