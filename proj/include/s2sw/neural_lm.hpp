// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Neural language models: a feed-forward n-gram model over concatenated word
// embeddings and a recurrent model over stacked cells, both trained through
// the autodiff graph. Also the four-point two-input MLP toy problem.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "s2sw/corpus.hpp"
#include "s2sw/graph.hpp"
#include "s2sw/parameters.hpp"
#include "s2sw/recurrent.hpp"
#include "s2sw/training.hpp"

namespace s2sw {

enum class Nonlinearity { tanh, relu };
Nonlinearity parse_nonlinearity(const std::string& name);
std::string to_string(Nonlinearity n);

struct FFNNLMConfig {
  unsigned order = 3;  // predicts from order-1 previous words
  std::size_t embed = 64;
  std::size_t hidden = 128;
  Nonlinearity nonlinearity = Nonlinearity::tanh;
};

class FFNNLM {
 public:
  FFNNLM(Vocabulary vocab, FFNNLMConfig config, std::uint64_t seed = 42);

  const Vocabulary& vocab() const { return vocab_; }
  const FFNNLMConfig& config() const { return config_; }
  ParameterCollection& params() { return params_; }
  const ParameterCollection& params() const { return params_; }

  /// |V| x k scores, one column per context; each context lists the order-1
  /// previous ids, oldest first.
  Expr scores(ComputationGraph& cg, const std::vector<std::vector<TokenId>>& contexts) const;
  /// Summed negative log likelihood of every token of every sentence.
  Expr loss(ComputationGraph& cg, std::span<const Sentence> sentences) const;

  /// Distribution after `history` (only the last order-1 ids matter).
  Tensor probabilities(std::span<const TokenId> history) const;
  std::vector<double> token_log_probs(std::span<const TokenId> sentence) const;
  HeldOutScore score_corpus(std::span<const Sentence> corpus) const;

  /// BOS-padded window of the order-1 ids before position t.
  std::vector<TokenId> context_at(std::span<const TokenId> sentence, std::size_t t) const;

 private:
  Vocabulary vocab_;
  FFNNLMConfig config_;
  ParameterCollection params_;
  Parameter* embed_;
  Parameter* w_mh_;
  Parameter* b_h_;
  Parameter* w_hs_;
  Parameter* b_s_;
};

struct RnnLMConfig {
  CellKind cell = CellKind::lstm_forget;
  std::size_t layers = 1;
  std::size_t embed = 64;
  std::size_t hidden = 128;
  bool residual = false;
};

class RnnLM {
 public:
  RnnLM(Vocabulary vocab, RnnLMConfig config, std::uint64_t seed = 42);

  const Vocabulary& vocab() const { return vocab_; }
  const RnnLMConfig& config() const { return config_; }
  ParameterCollection& params() { return params_; }
  const ParameterCollection& params() const { return params_; }
  const StackedRNN& rnn() const { return rnn_; }

  /// Masked loss of a minibatch: sum over (t, j) of mask * -log p(token).
  Expr batch_loss(ComputationGraph& cg, const MiniBatch& batch) const;
  /// Unbatched loss of one sentence.
  Expr sentence_loss(ComputationGraph& cg, std::span<const TokenId> sentence) const;

  using State = std::vector<StateValues>;
  State initial_state() const;
  /// Feeds `prev` and returns log-probabilities of the next token.
  Tensor step(State& state, TokenId prev) const;

  std::vector<double> token_log_probs(std::span<const TokenId> sentence) const;
  HeldOutScore score_corpus(std::span<const Sentence> corpus, std::size_t batch_size = 32) const;

 private:
  Expr output_scores(ComputationGraph& cg, Expr h) const;

  Vocabulary vocab_;
  RnnLMConfig config_;
  ParameterCollection params_;
  StackedRNN rnn_;
  Parameter* embed_;
  Parameter* w_hs_;
  Parameter* b_s_;
};

/// Batches of schedule.batch_size sentences (sorted by length for the
/// recurrent model), shuffled per epoch; dev perplexity per epoch.
TrainLog train_ffnnlm(FFNNLM& model, std::span<const Sentence> train, std::span<const Sentence> dev,
                      const TrainSchedule& schedule);
TrainLog train_rnnlm(RnnLM& model, std::span<const Sentence> train, std::span<const Sentence> dev,
                     const TrainSchedule& schedule);

struct ToyExample {
  std::array<double, 2> x;
  double y;
};

/// Points labeled 1 when both inputs agree and -1 otherwise.
std::vector<ToyExample> equality_toy_data();

struct ToyMlpOptions {
  std::size_t hidden = 20;
  unsigned epochs = 1000;
  double learning_rate = 0.1;
  double clip_norm = 5.0;  // <= 0 disables
  bool random_init = true;
  std::uint64_t seed = 42;
};

struct ToyMlpResult {
  std::vector<double> epoch_losses;  // summed squared error per epoch
  std::vector<double> predictions;   // final y(x) per data point
  bool all_correct = false;          // sign(y(x)) == label everywhere
};

/// tanh hidden layer, linear output, squared error, per-example SGD in
/// shuffled order.
ToyMlpResult train_toy_mlp(std::span<const ToyExample> data, const ToyMlpOptions& options);

}  // namespace s2sw
