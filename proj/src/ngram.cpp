// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "s2sw/error.hpp"

namespace s2sw {

NGramCountTable::NGramCountTable(unsigned order) : order_(order) {
  if (order == 0) throw ConfigError("n-gram order must be at least 1");
}

void NGramCountTable::add(std::span<const TokenId> key, std::uint64_t count) {
  if (key.empty() || key.size() > order_) {
    throw ConfigError("n-gram key length " + std::to_string(key.size()) + " outside 1.." +
                      std::to_string(order_));
  }
  counts_[std::vector<TokenId>(key.begin(), key.end())] += count;
  context_counts_[std::vector<TokenId>(key.begin(), key.end() - 1)] += count;
}

std::uint64_t NGramCountTable::count(std::span<const TokenId> key) const {
  auto it = counts_.find(std::vector<TokenId>(key.begin(), key.end()));
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t NGramCountTable::context_count(std::span<const TokenId> context) const {
  auto it = context_counts_.find(std::vector<TokenId>(context.begin(), context.end()));
  return it == context_counts_.end() ? 0 : it->second;
}

NGramCountTable train_counts(std::span<const Sentence> corpus, unsigned order) {
  NGramCountTable table(order);
  std::vector<TokenId> padded;
  for (const auto& s : corpus) {
    padded.assign(order - 1, kBos);
    padded.insert(padded.end(), s.begin(), s.end());
    for (std::size_t t = order - 1; t < padded.size(); ++t) {
      for (unsigned m = 1; m <= order; ++m) {
        table.add(std::span<const TokenId>(padded).subspan(t + 1 - m, m));
      }
    }
  }
  return table;
}

MleResult mle_prob(const NGramCountTable& table, std::span<const TokenId> context, TokenId token) {
  if (context.size() + 1 > table.order()) throw ConfigError("context longer than model order");
  const std::uint64_t denom = table.context_count(context);
  if (denom == 0) return {0.0, false};
  std::vector<TokenId> key(context.begin(), context.end());
  key.push_back(token);
  return {static_cast<double>(table.count(key)) / static_cast<double>(denom), true};
}

NGramModel::NGramModel(Vocabulary vocab, NGramCountTable table, InterpolationWeights weights)
    : vocab_(std::move(vocab)), table_(std::move(table)), weights_(std::move(weights)) {
  if (weights_.alpha.size() != table_.order()) {
    throw ConfigError("expected " + std::to_string(table_.order()) + " interpolation weights, got " +
                      std::to_string(weights_.alpha.size()));
  }
  for (double a : weights_.alpha) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("interpolation weights must lie in [0, 1]");
  }
}

NGramModel NGramModel::train(Vocabulary vocab, std::span<const Sentence> corpus, unsigned order,
                             InterpolationWeights weights) {
  return NGramModel(std::move(vocab), train_counts(corpus, order), std::move(weights));
}

std::vector<TokenId> NGramModel::padded_context(std::span<const TokenId> context) const {
  const std::size_t need = order() - 1;
  std::vector<TokenId> out(need, kBos);
  const std::size_t take = std::min(need, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
            out.end() - static_cast<std::ptrdiff_t>(take));
  return out;
}

double NGramModel::prob(std::span<const TokenId> context, TokenId token) const {
  const auto ctx = padded_context(context);
  double p = 1.0 / static_cast<double>(vocab_.v_all());
  for (unsigned m = 1; m <= order(); ++m) {
    const auto sub = std::span<const TokenId>(ctx).last(m - 1);
    const MleResult r = mle_prob(table_, sub, token);
    // An unseen context passes the lower-order estimate through unchanged.
    if (!r.context_seen) continue;
    const double a = weights_.alpha[m - 1];
    p = (1.0 - a) * r.probability + a * p;
  }
  return p;
}

double NGramModel::unknown_weight(std::span<const TokenId> context) const {
  const auto ctx = padded_context(context);
  double w = 1.0;
  for (unsigned m = 1; m <= order(); ++m) {
    if (table_.context_count(std::span<const TokenId>(ctx).last(m - 1)) > 0) {
      w *= weights_.alpha[m - 1];
    }
  }
  return w;
}

std::vector<double> NGramModel::token_log_probs(std::span<const TokenId> sentence) const {
  std::vector<double> out;
  out.reserve(sentence.size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    out.push_back(std::log(prob(sentence.first(t), sentence[t])));
  }
  return out;
}

double NGramModel::sentence_log_prob(std::span<const TokenId> sentence) const {
  double total = 0.0;
  for (double lp : token_log_probs(sentence)) total += lp;
  return total;
}

}  // namespace s2sw
