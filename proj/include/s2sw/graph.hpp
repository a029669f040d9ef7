// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over an explicit computation graph.
//
// Nodes are appended in construction order, which is already a topological
// order: an op can only reference nodes that exist. forward() evaluates nodes
// in insertion order (incrementally, each node once), backward() walks them in
// reverse and accumulates into parents. Parameter and lookup nodes push their
// gradients into the owning Parameter so that several graphs (e.g. a
// minibatch built one sentence at a time) can accumulate before an update.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "s2sw/parameters.hpp"
#include "s2sw/tensor.hpp"

namespace s2sw {

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
  input,
  parameter,
  lookup_column,
  matmul,
  add,
  sub,
  concat_rows,
  concat_cols,
  transpose,
  cmult,
  tanh,
  sigmoid,
  relu,
  step,
  softmax,
  pick_neg_log_softmax,
  pick,
  squared_distance,
  sum,
  sum_elems,
  scale,
};

std::string_view op_name(OpKind op);

class ComputationGraph;

/// Lightweight handle to a node in a ComputationGraph.
struct Expr {
  ComputationGraph* graph = nullptr;
  NodeId id = 0;

  const Tensor& value() const;
  const Tensor& gradient() const;
};

class ComputationGraph {
 public:
  ComputationGraph() = default;
  ComputationGraph(const ComputationGraph&) = delete;
  ComputationGraph& operator=(const ComputationGraph&) = delete;

  Expr input(Tensor value);
  Expr input_scalar(double v) { return input(Tensor::scalar(v)); }
  /// Repeated calls for the same parameter return the same node.
  Expr parameter(Parameter& p);
  /// Column `id` of an embedding-style matrix.
  Expr lookup(Parameter& p, std::uint32_t id);
  /// One column per id, side by side.
  Expr lookup(Parameter& p, std::vector<std::uint32_t> ids);

  /// Evaluates every node not yet evaluated; returns the last node's value.
  const Tensor& forward();
  /// Evaluates up to and including `e`.
  const Tensor& forward(Expr e);
  const Tensor& value(Expr e) { return forward(e); }

  /// Seeds `loss` (must be 1x1 and already evaluated) with 1 and propagates
  /// gradients back through every node that feeds it.
  void backward(Expr loss);
  /// Gradient of the last backward() with respect to `e` (zeros if unreached).
  const Tensor& gradient(Expr e) const;

  /// Marks every node unevaluated so the next forward() recomputes them
  /// (used after perturbing parameter or input values).
  void invalidate() { evaluated_ = 0; }
  Tensor& input_value(Expr e);

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Expr e) const { return nodes_.at(e.id).op; }

  // Used by the op free functions below.
  Expr append(OpKind op, std::vector<NodeId> args, double scalar = 0.0,
              std::vector<std::uint32_t> indices = {});

 private:
  struct Node {
    OpKind op = OpKind::input;
    std::vector<NodeId> args;
    Tensor value;
    Tensor grad;
    Tensor aux;  // softmax cache for pick_neg_log_softmax
    Parameter* param = nullptr;
    std::vector<std::uint32_t> indices;
    double scalar = 0.0;
    bool reached = false;
  };

  const Tensor& val(NodeId i) const {
    return nodes_[i].op == OpKind::parameter ? nodes_[i].param->value : nodes_[i].value;
  }
  void evaluate(NodeId i);
  void propagate(NodeId i);
  Tensor& grad_of(NodeId i);
  [[noreturn]] void shape_fail(NodeId i, const std::string& detail) const;

  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, NodeId>> param_cache_;
  std::size_t evaluated_ = 0;
  Tensor empty_;
};

Expr operator+(Expr a, Expr b);  // b may be a column broadcast across a's columns
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);  // matrix product
Expr operator*(double s, Expr a);
Expr matmul(Expr a, Expr b);
Expr cmult(Expr a, Expr b);
Expr tanh(Expr a);
Expr sigmoid(Expr a);
Expr relu(Expr a);
/// Heaviside step, forward only.
Expr step(Expr a);
Expr softmax(Expr a);
/// -log softmax(a)[target] per column, as a (1 x cols) row.
Expr pick_neg_log_softmax(Expr scores, std::uint32_t target);
Expr pick_neg_log_softmax(Expr scores, std::vector<std::uint32_t> targets);
/// Element `index` of the (row-major) value, as 1x1.
Expr pick(Expr a, std::size_t index);
Expr squared_distance(Expr a, Expr b);
Expr sum(std::span<const Expr> xs);
Expr sum_elems(Expr a);
Expr scale(Expr a, double s);
Expr concat_rows(std::span<const Expr> xs);
Expr concat_cols(std::span<const Expr> xs);
Expr transpose(Expr a);

inline Expr sum(std::initializer_list<Expr> xs) {
  return sum(std::span<const Expr>(xs.begin(), xs.size()));
}
inline Expr concat_rows(std::initializer_list<Expr> xs) {
  return concat_rows(std::span<const Expr>(xs.begin(), xs.size()));
}
inline Expr concat_cols(std::initializer_list<Expr> xs) {
  return concat_cols(std::span<const Expr>(xs.begin(), xs.size()));
}

}  // namespace s2sw
