// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/graph.hpp"

#include <cmath>
#include <string>

#include "s2sw/error.hpp"

namespace s2sw {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::input: return "input";
    case OpKind::parameter: return "parameter";
    case OpKind::lookup_column: return "lookup_column";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::concat_rows: return "concat_rows";
    case OpKind::concat_cols: return "concat_cols";
    case OpKind::transpose: return "transpose";
    case OpKind::cmult: return "cmult";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::relu: return "relu";
    case OpKind::step: return "step";
    case OpKind::softmax: return "softmax";
    case OpKind::pick_neg_log_softmax: return "pick_neg_log_softmax";
    case OpKind::pick: return "pick";
    case OpKind::squared_distance: return "squared_distance";
    case OpKind::sum: return "sum";
    case OpKind::sum_elems: return "sum_elems";
    case OpKind::scale: return "scale";
  }
  return "?";
}

const Tensor& Expr::value() const { return graph->value(*this); }
const Tensor& Expr::gradient() const { return graph->gradient(*this); }

Expr ComputationGraph::append(OpKind op, std::vector<NodeId> args, double scalar,
                              std::vector<std::uint32_t> indices) {
  for (NodeId a : args) {
    if (a >= nodes_.size()) throw ConfigError("expression refers to a node of another graph");
  }
  Node n;
  n.op = op;
  n.args = std::move(args);
  n.scalar = scalar;
  n.indices = std::move(indices);
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<NodeId>(nodes_.size() - 1)};
}

Expr ComputationGraph::input(Tensor value) {
  Expr e = append(OpKind::input, {});
  nodes_[e.id].value = std::move(value);
  return e;
}

Expr ComputationGraph::parameter(Parameter& p) {
  for (const auto& [param, id] : param_cache_) {
    if (param == &p) return Expr{this, id};
  }
  Expr e = append(OpKind::parameter, {});
  nodes_[e.id].param = &p;
  param_cache_.emplace_back(&p, e.id);
  return e;
}

Expr ComputationGraph::lookup(Parameter& p, std::uint32_t id) {
  return lookup(p, std::vector<std::uint32_t>{id});
}

Expr ComputationGraph::lookup(Parameter& p, std::vector<std::uint32_t> ids) {
  Expr e = append(OpKind::lookup_column, {}, 0.0, std::move(ids));
  nodes_[e.id].param = &p;
  return e;
}

Tensor& ComputationGraph::input_value(Expr e) {
  auto& n = nodes_.at(e.id);
  if (n.op != OpKind::input) throw ConfigError("input_value on a non-input node");
  return n.value;
}

const Tensor& ComputationGraph::forward() {
  if (nodes_.empty()) throw ConfigError("forward on an empty graph");
  return forward(Expr{this, static_cast<NodeId>(nodes_.size() - 1)});
}

const Tensor& ComputationGraph::forward(Expr e) {
  if (e.graph != this) throw ConfigError("expression belongs to another graph");
  while (evaluated_ <= e.id) {
    evaluate(static_cast<NodeId>(evaluated_));
    ++evaluated_;
  }
  return val(e.id);
}

void ComputationGraph::shape_fail(NodeId i, const std::string& detail) const {
  std::string msg = "node " + std::to_string(i) + " (" + std::string(op_name(nodes_[i].op)) +
                    "): " + detail + "; operand shapes";
  for (NodeId a : nodes_[i].args) msg += " " + val(a).shape_str();
  throw ShapeError(msg);
}

namespace {

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

void ComputationGraph::evaluate(NodeId i) {
  Node& n = nodes_[i];
  const auto arg = [&](std::size_t k) -> const Tensor& { return val(n.args[k]); };
  switch (n.op) {
    case OpKind::input:
    case OpKind::parameter:
      break;
    case OpKind::lookup_column: {
      const Tensor& m = n.param->value;
      n.value = Tensor(m.rows(), n.indices.size());
      for (std::size_t j = 0; j < n.indices.size(); ++j) {
        if (n.indices[j] >= m.cols()) {
          shape_fail(i, "column " + std::to_string(n.indices[j]) + " out of range for " +
                            n.param->name + " " + m.shape_str());
        }
        for (std::size_t r = 0; r < m.rows(); ++r) n.value(r, j) = m(r, n.indices[j]);
      }
      break;
    }
    case OpKind::matmul:
      if (arg(0).cols() != arg(1).rows()) shape_fail(i, "inner dimensions differ");
      n.value = s2sw::matmul(arg(0), arg(1));
      break;
    case OpKind::add:
    case OpKind::sub: {
      const Tensor& a = arg(0);
      const Tensor& b = arg(1);
      const double sign = n.op == OpKind::add ? 1.0 : -1.0;
      if (a.same_shape(b)) {
        n.value = a;
        for (std::size_t k = 0; k < a.size(); ++k) n.value[k] += sign * b[k];
      } else if (b.cols() == 1 && b.rows() == a.rows()) {
        n.value = a;
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < a.cols(); ++c) n.value(r, c) += sign * b[r];
      } else if (a.cols() == 1 && a.rows() == b.rows()) {
        n.value = Tensor(b.rows(), b.cols());
        for (std::size_t r = 0; r < b.rows(); ++r)
          for (std::size_t c = 0; c < b.cols(); ++c) n.value(r, c) = a[r] + sign * b(r, c);
      } else {
        shape_fail(i, "incompatible shapes");
      }
      break;
    }
    case OpKind::concat_rows: {
      std::size_t rows = 0;
      const std::size_t cols = arg(0).cols();
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        if (arg(k).cols() != cols) shape_fail(i, "column counts differ");
        rows += arg(k).rows();
      }
      n.value = Tensor(rows, cols);
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        const Tensor& a = arg(k);
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < cols; ++c) n.value(off + r, c) = a(r, c);
        off += a.rows();
      }
      break;
    }
    case OpKind::concat_cols: {
      std::size_t cols = 0;
      const std::size_t rows = arg(0).rows();
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        if (arg(k).rows() != rows) shape_fail(i, "row counts differ");
        cols += arg(k).cols();
      }
      n.value = Tensor(rows, cols);
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        const Tensor& a = arg(k);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < a.cols(); ++c) n.value(r, off + c) = a(r, c);
        off += a.cols();
      }
      break;
    }
    case OpKind::transpose:
      n.value = s2sw::transpose(arg(0));
      break;
    case OpKind::cmult: {
      const Tensor& a = arg(0);
      const Tensor& b = arg(1);
      if (!a.same_shape(b)) shape_fail(i, "shapes differ");
      n.value = a;
      for (std::size_t k = 0; k < a.size(); ++k) n.value[k] *= b[k];
      break;
    }
    case OpKind::tanh:
      n.value = map(arg(0), [](double x) { return std::tanh(x); });
      break;
    case OpKind::sigmoid:
      n.value = map(arg(0), sigmoid_scalar);
      break;
    case OpKind::relu:
      n.value = map(arg(0), [](double x) { return x > 0.0 ? x : 0.0; });
      break;
    case OpKind::step:
      n.value = map(arg(0), [](double x) { return x > 0.0 ? 1.0 : 0.0; });
      break;
    case OpKind::softmax:
      n.value = s2sw::softmax(arg(0));
      break;
    case OpKind::pick_neg_log_softmax: {
      const Tensor& s = arg(0);
      if (n.indices.size() != s.cols()) shape_fail(i, "one target per column required");
      const Tensor logp = s2sw::log_softmax(s);
      n.value = Tensor(1, s.cols());
      n.aux = Tensor(s.rows(), s.cols());
      for (std::size_t c = 0; c < s.cols(); ++c) {
        if (n.indices[c] >= s.rows()) shape_fail(i, "target id out of range");
        n.value[c] = -logp(n.indices[c], c);
      }
      for (std::size_t k = 0; k < logp.size(); ++k) n.aux[k] = std::exp(logp[k]);
      break;
    }
    case OpKind::pick:
      if (n.indices[0] >= arg(0).size()) shape_fail(i, "index out of range");
      n.value = Tensor::scalar(arg(0)[n.indices[0]]);
      break;
    case OpKind::squared_distance: {
      const Tensor& a = arg(0);
      const Tensor& b = arg(1);
      if (!a.same_shape(b)) shape_fail(i, "shapes differ");
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      n.value = Tensor::scalar(s);
      break;
    }
    case OpKind::sum: {
      n.value = arg(0);
      for (std::size_t k = 1; k < n.args.size(); ++k) {
        if (!arg(k).same_shape(n.value)) shape_fail(i, "shapes differ");
        n.value += arg(k);
      }
      break;
    }
    case OpKind::sum_elems: {
      double s = 0.0;
      for (double x : arg(0).data()) s += x;
      n.value = Tensor::scalar(s);
      break;
    }
    case OpKind::scale:
      n.value = arg(0);
      n.value *= n.scalar;
      break;
  }
}

Tensor& ComputationGraph::grad_of(NodeId i) {
  Node& n = nodes_[i];
  if (!n.reached) {
    const Tensor& v = val(i);
    n.grad = Tensor(v.rows(), v.cols());
    n.reached = true;
  }
  return n.grad;
}

void ComputationGraph::backward(Expr loss) {
  if (loss.graph != this) throw ConfigError("expression belongs to another graph");
  if (loss.id >= evaluated_) throw ConfigError("backward called before forward");
  const Tensor& lv = val(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + lv.shape_str());
  }
  for (auto& n : nodes_) {
    n.reached = false;
    n.grad = Tensor();
  }
  grad_of(loss.id).fill(1.0);
  for (std::size_t k = loss.id + 1; k-- > 0;) {
    if (nodes_[k].reached) propagate(static_cast<NodeId>(k));
  }
}

const Tensor& ComputationGraph::gradient(Expr e) const {
  const Node& n = nodes_.at(e.id);
  return n.reached ? n.grad : empty_;
}

void ComputationGraph::propagate(NodeId i) {
  Node& n = nodes_[i];
  const Tensor& g = n.grad;
  const auto arg = [&](std::size_t k) -> const Tensor& { return val(n.args[k]); };
  switch (n.op) {
    case OpKind::input:
      break;
    case OpKind::parameter:
      n.param->grad += g;
      break;
    case OpKind::lookup_column: {
      Tensor& pg = n.param->grad;
      for (std::size_t j = 0; j < n.indices.size(); ++j)
        for (std::size_t r = 0; r < pg.rows(); ++r) pg(r, n.indices[j]) += g(r, j);
      break;
    }
    case OpKind::matmul: {
      matmul_add_bt(g, arg(1), grad_of(n.args[0]));
      matmul_add_at(arg(0), g, grad_of(n.args[1]));
      break;
    }
    case OpKind::add:
    case OpKind::sub: {
      const double sign = n.op == OpKind::add ? 1.0 : -1.0;
      for (std::size_t k = 0; k < 2; ++k) {
        Tensor& pg = grad_of(n.args[k]);
        const double sg = k == 0 ? 1.0 : sign;
        if (pg.same_shape(g)) {
          for (std::size_t e = 0; e < g.size(); ++e) pg[e] += sg * g[e];
        } else {  // broadcast column
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) pg[r] += sg * g(r, c);
        }
      }
      break;
    }
    case OpKind::concat_rows: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        Tensor& pg = grad_of(n.args[k]);
        for (std::size_t r = 0; r < pg.rows(); ++r)
          for (std::size_t c = 0; c < pg.cols(); ++c) pg(r, c) += g(off + r, c);
        off += pg.rows();
      }
      break;
    }
    case OpKind::concat_cols: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        Tensor& pg = grad_of(n.args[k]);
        for (std::size_t r = 0; r < pg.rows(); ++r)
          for (std::size_t c = 0; c < pg.cols(); ++c) pg(r, c) += g(r, off + c);
        off += pg.cols();
      }
      break;
    }
    case OpKind::transpose: {
      Tensor& pg = grad_of(n.args[0]);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) pg(c, r) += g(r, c);
      break;
    }
    case OpKind::cmult: {
      {
        Tensor& pa = grad_of(n.args[0]);
        const Tensor& b = arg(1);
        for (std::size_t e = 0; e < g.size(); ++e) pa[e] += g[e] * b[e];
      }
      {
        Tensor& pb = grad_of(n.args[1]);
        const Tensor& a = arg(0);
        for (std::size_t e = 0; e < g.size(); ++e) pb[e] += g[e] * a[e];
      }
      break;
    }
    case OpKind::tanh: {
      Tensor& pg = grad_of(n.args[0]);
      for (std::size_t e = 0; e < g.size(); ++e) pg[e] += g[e] * (1.0 - n.value[e] * n.value[e]);
      break;
    }
    case OpKind::sigmoid: {
      Tensor& pg = grad_of(n.args[0]);
      for (std::size_t e = 0; e < g.size(); ++e) pg[e] += g[e] * n.value[e] * (1.0 - n.value[e]);
      break;
    }
    case OpKind::relu: {
      Tensor& pg = grad_of(n.args[0]);
      const Tensor& x = arg(0);
      for (std::size_t e = 0; e < g.size(); ++e)
        if (x[e] > 0.0) pg[e] += g[e];
      break;
    }
    case OpKind::step:
      throw ConfigError("node " + std::to_string(i) +
                        " (step) has no usable derivative; backward through step is not supported");
    case OpKind::softmax: {
      Tensor& pg = grad_of(n.args[0]);
      const Tensor& y = n.value;
      for (std::size_t c = 0; c < y.cols(); ++c) {
        double dot = 0.0;
        for (std::size_t r = 0; r < y.rows(); ++r) dot += g(r, c) * y(r, c);
        for (std::size_t r = 0; r < y.rows(); ++r) pg(r, c) += y(r, c) * (g(r, c) - dot);
      }
      break;
    }
    case OpKind::pick_neg_log_softmax: {
      Tensor& pg = grad_of(n.args[0]);
      const Tensor& p = n.aux;
      for (std::size_t c = 0; c < p.cols(); ++c) {
        const double gc = g[c];
        if (gc == 0.0) continue;
        for (std::size_t r = 0; r < p.rows(); ++r) pg(r, c) += gc * p(r, c);
        pg(n.indices[c], c) -= gc;
      }
      break;
    }
    case OpKind::pick:
      grad_of(n.args[0])[n.indices[0]] += g[0];
      break;
    case OpKind::squared_distance: {
      const Tensor& a = arg(0);
      const Tensor& b = arg(1);
      {
        Tensor& pa = grad_of(n.args[0]);
        for (std::size_t e = 0; e < a.size(); ++e) pa[e] += 2.0 * (a[e] - b[e]) * g[0];
      }
      {
        Tensor& pb = grad_of(n.args[1]);
        for (std::size_t e = 0; e < a.size(); ++e) pb[e] -= 2.0 * (a[e] - b[e]) * g[0];
      }
      break;
    }
    case OpKind::sum:
      for (NodeId a : n.args) grad_of(a) += g;
      break;
    case OpKind::sum_elems: {
      Tensor& pg = grad_of(n.args[0]);
      for (double& x : pg.data()) x += g[0];
      break;
    }
    case OpKind::scale: {
      Tensor& pg = grad_of(n.args[0]);
      for (std::size_t e = 0; e < g.size(); ++e) pg[e] += n.scalar * g[e];
      break;
    }
  }
}

namespace {

ComputationGraph& graph_of(Expr a) {
  if (a.graph == nullptr) throw ConfigError("expression is not attached to a graph");
  return *a.graph;
}

ComputationGraph& graph_of(Expr a, Expr b) {
  if (a.graph != b.graph) throw ConfigError("expressions belong to different graphs");
  return graph_of(a);
}

Expr nary(OpKind op, std::span<const Expr> xs) {
  if (xs.empty()) throw ConfigError(std::string(op_name(op)) + " of zero expressions");
  std::vector<NodeId> ids;
  ids.reserve(xs.size());
  for (const Expr& e : xs) {
    graph_of(xs[0], e);
    ids.push_back(e.id);
  }
  return graph_of(xs[0]).append(op, std::move(ids));
}

}  // namespace

Expr operator+(Expr a, Expr b) { return graph_of(a, b).append(OpKind::add, {a.id, b.id}); }
Expr operator-(Expr a, Expr b) { return graph_of(a, b).append(OpKind::sub, {a.id, b.id}); }
Expr operator*(Expr a, Expr b) { return matmul(a, b); }
Expr operator*(double s, Expr a) { return scale(a, s); }
Expr matmul(Expr a, Expr b) { return graph_of(a, b).append(OpKind::matmul, {a.id, b.id}); }
Expr cmult(Expr a, Expr b) { return graph_of(a, b).append(OpKind::cmult, {a.id, b.id}); }
Expr tanh(Expr a) { return graph_of(a).append(OpKind::tanh, {a.id}); }
Expr sigmoid(Expr a) { return graph_of(a).append(OpKind::sigmoid, {a.id}); }
Expr relu(Expr a) { return graph_of(a).append(OpKind::relu, {a.id}); }
Expr step(Expr a) { return graph_of(a).append(OpKind::step, {a.id}); }
Expr softmax(Expr a) { return graph_of(a).append(OpKind::softmax, {a.id}); }

Expr pick_neg_log_softmax(Expr scores, std::uint32_t target) {
  return pick_neg_log_softmax(scores, std::vector<std::uint32_t>{target});
}

Expr pick_neg_log_softmax(Expr scores, std::vector<std::uint32_t> targets) {
  return graph_of(scores).append(OpKind::pick_neg_log_softmax, {scores.id}, 0.0, std::move(targets));
}

Expr pick(Expr a, std::size_t index) {
  return graph_of(a).append(OpKind::pick, {a.id}, 0.0, {static_cast<std::uint32_t>(index)});
}

Expr squared_distance(Expr a, Expr b) {
  return graph_of(a, b).append(OpKind::squared_distance, {a.id, b.id});
}

Expr sum(std::span<const Expr> xs) { return nary(OpKind::sum, xs); }
Expr sum_elems(Expr a) { return graph_of(a).append(OpKind::sum_elems, {a.id}); }
Expr scale(Expr a, double s) { return graph_of(a).append(OpKind::scale, {a.id}, s); }
Expr concat_rows(std::span<const Expr> xs) { return nary(OpKind::concat_rows, xs); }
Expr concat_cols(std::span<const Expr> xs) { return nary(OpKind::concat_cols, xs); }
Expr transpose(Expr a) { return graph_of(a).append(OpKind::transpose, {a.id}); }

}  // namespace s2sw
