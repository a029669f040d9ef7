// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Recurrent cells (Elman RNN, LSTM with and without a forget gate, GRU) and
// stacks of them. States are n x B expressions so one step advances a whole
// minibatch.

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "s2sw/graph.hpp"
#include "s2sw/parameters.hpp"

namespace s2sw {

enum class CellKind { rnn, lstm, lstm_forget, gru };

CellKind parse_cell_kind(const std::string& name);
std::string to_string(CellKind kind);
inline bool has_cell_state(CellKind k) { return k == CellKind::lstm || k == CellKind::lstm_forget; }

struct RecurrentState {
  Expr h;
  Expr c;  // meaningful only when has_cell
  bool has_cell = false;
};

/// Tensor-valued counterpart of RecurrentState, for carrying state between
/// graphs at inference time.
struct StateValues {
  Tensor h;
  Tensor c;
};

class RecurrentCell {
 public:
  /// Registers "<prefix>/W_x?", "<prefix>/W_h?", "<prefix>/b_?" in `params`
  /// and initializes them (Glorot weights, zero biases, forget bias 1).
  RecurrentCell(ParameterCollection& params, const std::string& prefix, CellKind kind,
                std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng);

  CellKind kind() const { return kind_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t hidden_size() const { return hidden_size_; }

  /// Zero state for `batch` columns.
  RecurrentState initial_state(ComputationGraph& cg, std::size_t batch = 1) const;
  RecurrentState state_from(ComputationGraph& cg, const StateValues& v) const;
  RecurrentState step(ComputationGraph& cg, Expr x, const RecurrentState& prev) const;

  /// Gate parameter by suffix, e.g. "b_f" or "W_hi".
  Parameter& param(const std::string& suffix) const;

 private:
  struct Gate {
    Parameter* wx;
    Parameter* wh;
    Parameter* b;
  };
  Expr affine(ComputationGraph& cg, const Gate& g, Expr x, Expr h) const;

  CellKind kind_;
  std::size_t input_size_;
  std::size_t hidden_size_;
  std::string letters_;       // one gate letter per entry of gates_
  std::vector<Gate> gates_;
};

class StackedRNN {
 public:
  /// Layer names are "<prefix>/l0", "<prefix>/l1", ... With `residual`, each
  /// layer's output is its hidden state plus its input, which requires
  /// input_size == hidden_size for every layer.
  StackedRNN(ParameterCollection& params, const std::string& prefix, CellKind kind, std::size_t layers,
             std::size_t input_size, std::size_t hidden_size, bool residual, std::mt19937_64& rng);

  std::size_t layers() const { return cells_.size(); }
  std::size_t hidden_size() const { return cells_.back().hidden_size(); }
  std::size_t input_size() const { return cells_.front().input_size(); }
  CellKind kind() const { return cells_.front().kind(); }
  bool residual() const { return residual_; }
  const RecurrentCell& cell(std::size_t i) const { return cells_.at(i); }

  std::vector<RecurrentState> initial_state(ComputationGraph& cg, std::size_t batch = 1) const;
  std::vector<RecurrentState> state_from(ComputationGraph& cg, const std::vector<StateValues>& v) const;
  static std::vector<StateValues> values_of(ComputationGraph& cg, const std::vector<RecurrentState>& s);

  /// Advances every layer; `output` receives the top layer's output.
  std::vector<RecurrentState> step(ComputationGraph& cg, Expr x, const std::vector<RecurrentState>& prev,
                                   Expr* output) const;

 private:
  std::vector<RecurrentCell> cells_;
  bool residual_;
};

}  // namespace s2sw
