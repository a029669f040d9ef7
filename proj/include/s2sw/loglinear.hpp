// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Log-linear language model: sparse features of the history, scores
// s = W x + b, softmax, and closed-form gradients of the negative log
// likelihood trained with plain SGD.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2sw/corpus.hpp"
#include "s2sw/tensor.hpp"
#include "s2sw/training.hpp"

namespace s2sw {

struct FeatureVector {
  std::vector<std::pair<std::size_t, double>> active;  // (index, value), unique indices
  std::size_t dimension = 0;
};

enum class FeatureKind { prev_word, prev2_words, suffix, bag_of_words };

struct FeatureTemplate {
  FeatureKind kind = FeatureKind::prev2_words;
  unsigned suffix_length = 0;  // suffix_k only

  /// "prev_word", "prev2_words", "suffix_<k>", "bag_of_words"
  static FeatureTemplate parse(const std::string& name);
  std::string name() const;
};

/// Allocates feature indices block by block in template order.
class FeatureExtractor {
 public:
  FeatureExtractor(const Vocabulary& vocab, std::vector<FeatureTemplate> templates);

  /// Comma-separated template names, e.g. "prev_word,suffix_2".
  static FeatureExtractor from_descriptor(const Vocabulary& vocab, const std::string& descriptor);

  /// `history` holds the sentence tokens before the predicted position; it is
  /// left-padded with <s> as far as each template needs.
  FeatureVector featurize(std::span<const TokenId> history) const;

  std::size_t dimension() const { return dimension_; }
  std::string descriptor() const;
  const std::vector<FeatureTemplate>& templates() const { return templates_; }

 private:
  std::size_t vocab_size_;
  std::vector<FeatureTemplate> templates_;
  std::vector<std::size_t> offsets_;
  // per token id: index of its suffix within each suffix block (or npos)
  std::vector<std::vector<std::size_t>> suffix_ids_;
  std::size_t dimension_ = 0;
};

/// One-template convenience matching the free-function form.
FeatureVector featurize(std::span<const TokenId> history, const Vocabulary& vocab,
                        const std::string& template_name);

struct LogLinearParams {
  Tensor weights;  // |V| x N
  Tensor bias;     // |V| x 1

  LogLinearParams() = default;
  LogLinearParams(std::size_t vocab_size, std::size_t dimension)
      : weights(vocab_size, dimension), bias(vocab_size, 1) {}
};

/// s = sum over active j of W[:, j] * x_j + b.
Tensor score(const LogLinearParams& params, const FeatureVector& x);
/// Same scores through a dense matrix-vector product (reference path).
Tensor score_dense(const LogLinearParams& params, const FeatureVector& x);

struct LossGrad {
  double loss = 0.0;
  Tensor grad_bias;                                       // p - onehot(target)
  std::vector<std::pair<std::size_t, Tensor>> grad_cols;  // x_j * grad_bias per active j
};

LossGrad loss_and_grad(const LogLinearParams& params, const FeatureVector& x, TokenId target);

class LogLinearLM {
 public:
  LogLinearLM(Vocabulary vocab, const std::string& descriptor);
  LogLinearLM(Vocabulary vocab, const std::string& descriptor, LogLinearParams params);

  const Vocabulary& vocab() const { return vocab_; }
  const FeatureExtractor& features() const { return features_; }
  LogLinearParams& params() { return params_; }
  const LogLinearParams& params() const { return params_; }

  /// Distribution over the vocabulary after `history`.
  Tensor probabilities(std::span<const TokenId> history) const;
  std::vector<double> token_log_probs(std::span<const TokenId> sentence) const;
  double log_likelihood(std::span<const Sentence> corpus) const;

 private:
  Vocabulary vocab_;
  FeatureExtractor features_;
  LogLinearParams params_;
};

/// Per-example SGD in (optionally) shuffled order, dev log-likelihood after
/// every epoch, halving on no improvement and best-dev snapshot. Only
/// schedule.optimizer.learning_rate is read; 0 leaves the model untouched.
/// Throws DivergenceError on a non-finite loss.
TrainLog train_sgd(LogLinearLM& model, std::span<const Sentence> train,
                   std::span<const Sentence> dev, const TrainSchedule& schedule);

}  // namespace s2sw
