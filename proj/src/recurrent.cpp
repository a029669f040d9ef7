// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/recurrent.hpp"

#include "s2sw/error.hpp"

namespace s2sw {

CellKind parse_cell_kind(const std::string& name) {
  if (name == "rnn") return CellKind::rnn;
  if (name == "lstm") return CellKind::lstm;
  if (name == "lstm_forget") return CellKind::lstm_forget;
  if (name == "gru") return CellKind::gru;
  throw ConfigError("unknown cell kind '" + name + "'");
}

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::rnn: return "rnn";
    case CellKind::lstm: return "lstm";
    case CellKind::lstm_forget: return "lstm_forget";
    case CellKind::gru: return "gru";
  }
  return "";
}

namespace {

// Gate letters per kind, in the order they are stored.
std::string gate_letters(CellKind kind) {
  switch (kind) {
    case CellKind::rnn: return "h";
    case CellKind::lstm: return "uio";
    case CellKind::lstm_forget: return "uiof";
    case CellKind::gru: return "rzh";
  }
  return "";
}

}  // namespace

RecurrentCell::RecurrentCell(ParameterCollection& params, const std::string& prefix, CellKind kind,
                             std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng)
    : kind_(kind), input_size_(input_size), hidden_size_(hidden_size), letters_(gate_letters(kind)) {
  if (input_size == 0 || hidden_size == 0) throw ConfigError("recurrent cell sizes must be positive");
  for (char g : letters_) {
    const std::string s(1, g);
    Gate gate{&params.add(prefix + "/W_x" + s, hidden_size, input_size),
              &params.add(prefix + "/W_h" + s, hidden_size, hidden_size),
              &params.add(prefix + "/b_" + s, hidden_size, 1)};
    fill_glorot(gate.wx->value, rng);
    fill_glorot(gate.wh->value, rng);
    if (g == 'f') gate.b->value.fill(1.0);
    gates_.push_back(gate);
  }
}

Parameter& RecurrentCell::param(const std::string& suffix) const {
  const auto at = suffix.size() == 4 && suffix.starts_with("W_") ? letters_.find(suffix[3])
                  : suffix.size() == 3 && suffix.starts_with("b_") ? letters_.find(suffix[2])
                                                                    : std::string::npos;
  if (at == std::string::npos) throw ConfigError("no gate parameter '" + suffix + "' in " + to_string(kind_) + " cell");
  const Gate& g = gates_[at];
  if (suffix[0] == 'b') return *g.b;
  if (suffix[2] == 'x') return *g.wx;
  if (suffix[2] == 'h') return *g.wh;
  throw ConfigError("no gate parameter '" + suffix + "' in " + to_string(kind_) + " cell");
}

RecurrentState RecurrentCell::initial_state(ComputationGraph& cg, std::size_t batch) const {
  RecurrentState s;
  s.h = cg.input(Tensor(hidden_size_, batch));
  s.has_cell = has_cell_state(kind_);
  if (s.has_cell) s.c = cg.input(Tensor(hidden_size_, batch));
  return s;
}

RecurrentState RecurrentCell::state_from(ComputationGraph& cg, const StateValues& v) const {
  RecurrentState s;
  s.h = cg.input(v.h);
  s.has_cell = has_cell_state(kind_);
  if (s.has_cell) s.c = cg.input(v.c.size() ? v.c : Tensor(v.h.rows(), v.h.cols()));
  return s;
}

Expr RecurrentCell::affine(ComputationGraph& cg, const Gate& g, Expr x, Expr h) const {
  return cg.parameter(*g.wx) * x + cg.parameter(*g.wh) * h + cg.parameter(*g.b);
}

RecurrentState RecurrentCell::step(ComputationGraph& cg, Expr x, const RecurrentState& prev) const {
  if (has_cell_state(kind_) != prev.has_cell) {
    throw ConfigError(to_string(kind_) + " cell given a state " + (prev.has_cell ? "with" : "without") +
                      " a memory cell");
  }
  RecurrentState next;
  next.has_cell = prev.has_cell;
  switch (kind_) {
    case CellKind::rnn:
      next.h = tanh(affine(cg, gates_[0], x, prev.h));
      break;
    case CellKind::lstm:
    case CellKind::lstm_forget: {
      const Expr u = tanh(affine(cg, gates_[0], x, prev.h));
      const Expr i = sigmoid(affine(cg, gates_[1], x, prev.h));
      const Expr o = sigmoid(affine(cg, gates_[2], x, prev.h));
      Expr carried = prev.c;
      if (kind_ == CellKind::lstm_forget) carried = cmult(sigmoid(affine(cg, gates_[3], x, prev.h)), prev.c);
      next.c = cmult(i, u) + carried;
      next.h = cmult(o, tanh(next.c));
      break;
    }
    case CellKind::gru: {
      const Expr r = sigmoid(affine(cg, gates_[0], x, prev.h));
      const Expr z = sigmoid(affine(cg, gates_[1], x, prev.h));
      const Gate& g = gates_[2];
      const Expr candidate =
          tanh(cg.parameter(*g.wx) * x + cg.parameter(*g.wh) * cmult(r, prev.h) + cg.parameter(*g.b));
      // (1 - z) h + z h~ written as h + z (h~ - h)
      next.h = prev.h + cmult(z, candidate - prev.h);
      break;
    }
  }
  return next;
}

StackedRNN::StackedRNN(ParameterCollection& params, const std::string& prefix, CellKind kind, std::size_t layers,
                       std::size_t input_size, std::size_t hidden_size, bool residual, std::mt19937_64& rng)
    : residual_(residual) {
  if (layers == 0) throw ConfigError("a recurrent stack needs at least one layer");
  if (residual && input_size != hidden_size) {
    throw ConfigError("residual connections need input size " + std::to_string(input_size) +
                      " to equal hidden size " + std::to_string(hidden_size));
  }
  for (std::size_t l = 0; l < layers; ++l) {
    cells_.emplace_back(params, prefix + "/l" + std::to_string(l), kind, l == 0 ? input_size : hidden_size,
                        hidden_size, rng);
  }
}

std::vector<RecurrentState> StackedRNN::initial_state(ComputationGraph& cg, std::size_t batch) const {
  std::vector<RecurrentState> out;
  for (const auto& c : cells_) out.push_back(c.initial_state(cg, batch));
  return out;
}

std::vector<RecurrentState> StackedRNN::state_from(ComputationGraph& cg, const std::vector<StateValues>& v) const {
  if (v.size() != cells_.size()) throw ShapeError("state has " + std::to_string(v.size()) + " layers, expected " +
                                                  std::to_string(cells_.size()));
  std::vector<RecurrentState> out;
  for (std::size_t l = 0; l < cells_.size(); ++l) out.push_back(cells_[l].state_from(cg, v[l]));
  return out;
}

std::vector<StateValues> StackedRNN::values_of(ComputationGraph& cg, const std::vector<RecurrentState>& s) {
  std::vector<StateValues> out;
  for (const auto& st : s) {
    StateValues v;
    v.h = cg.forward(st.h);
    if (st.has_cell) v.c = cg.forward(st.c);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<RecurrentState> StackedRNN::step(ComputationGraph& cg, Expr x, const std::vector<RecurrentState>& prev,
                                             Expr* output) const {
  if (prev.size() != cells_.size()) throw ShapeError("state has " + std::to_string(prev.size()) +
                                                     " layers, expected " + std::to_string(cells_.size()));
  std::vector<RecurrentState> next;
  Expr in = x;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    next.push_back(cells_[l].step(cg, in, prev[l]));
    in = residual_ ? next.back().h + in : next.back().h;
  }
  if (output) *output = in;
  return next;
}

}  // namespace s2sw
