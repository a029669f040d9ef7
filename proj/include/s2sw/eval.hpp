// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Held-out likelihood, perplexity and corpus BLEU.

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "s2sw/corpus.hpp"

namespace s2sw {

class NGramModel;
class LogLinearLM;
class FFNNLM;
class RnnLM;
class EncDecModel;
struct SentencePair;

/// Every count includes one </s> per sentence.
struct EvalReport {
  double total_log_likelihood = 0.0;
  std::size_t word_count = 0;
  double per_word_ll = 0.0;
  double perplexity = 0.0;
  std::size_t unk_count = 0;
  /// Part of total_log_likelihood that comes from spelling out unknown words
  /// with the uniform 1 / v_all distribution.
  double unk_log_portion = 0.0;
};

/// Per-token natural-log probabilities of one sentence, with a flag for
/// tokens that stand for an out-of-vocabulary word.
struct ScoredSentence {
  std::vector<double> log_probs;
  std::vector<bool> unknown;
};

/// Aggregates scored sentences. Sentence totals are summed in sorted order so
/// the result does not depend on corpus order. Throws DataError when empty.
/// `unk_log_prob` is the per-unknown-word share already included in the
/// token log-probabilities.
EvalReport summarize(std::span<const ScoredSentence> sentences, double unk_log_prob);

/// The n-gram estimate already spreads its unknown-word mass over v_all
/// words; other models predict <unk> as one class, which is then multiplied
/// by 1 / v_all.
EvalReport evaluate(const NGramModel& model, std::span<const Sentence> corpus);
EvalReport evaluate(const LogLinearLM& model, std::span<const Sentence> corpus);
EvalReport evaluate(const FFNNLM& model, std::span<const Sentence> corpus);
EvalReport evaluate(const RnnLM& model, std::span<const Sentence> corpus);
EvalReport evaluate(const EncDecModel& model, std::span<const SentencePair> pairs);

/// One "key<TAB>value" line per field.
void write_report(std::ostream& out, const EvalReport& report);

struct BleuReport {
  double bleu = 0.0;
  double brevity_penalty = 0.0;
  std::vector<double> precisions;  // clipped n-gram precisions, n = 1..max_n
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

/// Corpus-level BLEU with one reference per hypothesis, clipped counts and no
/// smoothing. Throws DataError on empty input or mismatched line counts.
BleuReport bleu(std::span<const std::vector<std::string>> hypotheses,
                std::span<const std::vector<std::string>> references, std::size_t max_n = 4);
/// Whitespace-tokenized lines.
BleuReport bleu_lines(std::span<const std::string> hypotheses, std::span<const std::string> references,
                      std::size_t max_n = 4);

void write_report(std::ostream& out, const BleuReport& report);

}  // namespace s2sw
