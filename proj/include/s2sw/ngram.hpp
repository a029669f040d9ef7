// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Count-based n-gram language model with recursive linear interpolation down
// to a uniform distribution over an assumed full vocabulary of v_all words.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "s2sw/corpus.hpp"

namespace s2sw {

/// Counts of every token string of length 1..n observed at the positions of
/// a </s>-terminated corpus, with contexts padded by <s>.
class NGramCountTable {
 public:
  explicit NGramCountTable(unsigned order);

  unsigned order() const { return order_; }

  /// Adds one occurrence of `key` (length 1..n) and of its context prefix.
  void add(std::span<const TokenId> key, std::uint64_t count = 1);

  /// c(key); 0 when absent.
  std::uint64_t count(std::span<const TokenId> key) const;
  /// Number of positions preceded by `context` (the MLE denominator). The
  /// empty context counts every position.
  std::uint64_t context_count(std::span<const TokenId> context) const;

  const std::map<std::vector<TokenId>, std::uint64_t>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }

  bool operator==(const NGramCountTable& o) const {
    return order_ == o.order_ && counts_ == o.counts_;
  }

 private:
  unsigned order_;
  std::map<std::vector<TokenId>, std::uint64_t> counts_;
  std::map<std::vector<TokenId>, std::uint64_t> context_counts_;
};

/// Counts every order 1..n at every position t = 1..T+1 of each sentence.
NGramCountTable train_counts(std::span<const Sentence> corpus, unsigned order);

struct MleResult {
  double probability = 0.0;
  bool context_seen = false;
};

/// c(context . token) / c(context); probability 0 and context_seen == false
/// when the context never occurred.
MleResult mle_prob(const NGramCountTable& table, std::span<const TokenId> context, TokenId token);

/// alpha[m-1] is the mass held out from the order-m estimate.
struct InterpolationWeights {
  std::vector<double> alpha;

  static InterpolationWeights uniform(unsigned order, double a) {
    return {std::vector<double>(order, a)};
  }
};

class NGramModel {
 public:
  NGramModel(Vocabulary vocab, NGramCountTable table, InterpolationWeights weights);

  static NGramModel train(Vocabulary vocab, std::span<const Sentence> corpus, unsigned order,
                          InterpolationWeights weights);

  unsigned order() const { return table_.order(); }
  const Vocabulary& vocab() const { return vocab_; }
  const NGramCountTable& table() const { return table_; }
  const InterpolationWeights& weights() const { return weights_; }

  /// Interpolated probability of `token` after `context`. Only the last n-1
  /// context ids are used; shorter contexts are left-padded with <s>.
  double prob(std::span<const TokenId> context, TokenId token) const;

  /// Weight that the unknown-word base distribution receives after context
  /// (the product of the hold-out weights along the interpolation path).
  double unknown_weight(std::span<const TokenId> context) const;

  /// Per-position natural-log probabilities of a </s>-terminated sentence.
  std::vector<double> token_log_probs(std::span<const TokenId> sentence) const;
  double sentence_log_prob(std::span<const TokenId> sentence) const;

 private:
  std::vector<TokenId> padded_context(std::span<const TokenId> context) const;

  Vocabulary vocab_;
  NGramCountTable table_;
  InterpolationWeights weights_;
};

}  // namespace s2sw
