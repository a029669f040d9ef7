// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "s2sw/error.hpp"
#include "s2sw/loglinear.hpp"
#include "s2sw/neural_lm.hpp"
#include "s2sw/ngram.hpp"
#include "s2sw/seq2seq.hpp"

namespace s2sw {

namespace {

ScoredSentence mark_unknowns(std::span<const TokenId> sentence, std::vector<double> log_probs) {
  ScoredSentence s;
  s.log_probs = std::move(log_probs);
  s.unknown.reserve(sentence.size());
  for (TokenId id : sentence) s.unknown.push_back(id == kUnk);
  return s;
}

// Multiplies the single <unk> class probability by the uniform spelling model.
void spell_unknowns(ScoredSentence& s, double unk_log_prob) {
  for (std::size_t t = 0; t < s.log_probs.size(); ++t) {
    if (s.unknown[t]) s.log_probs[t] += unk_log_prob;
  }
}

template <typename ScoreFn>
EvalReport evaluate_class_model(std::span<const Sentence> corpus, std::uint64_t v_all, ScoreFn&& score) {
  const double unk_lp = -std::log(static_cast<double>(v_all));
  std::vector<ScoredSentence> scored;
  scored.reserve(corpus.size());
  for (const Sentence& s : corpus) {
    scored.push_back(mark_unknowns(s, score(s)));
    spell_unknowns(scored.back(), unk_lp);
  }
  return summarize(scored, unk_lp);
}

}  // namespace

EvalReport summarize(std::span<const ScoredSentence> sentences, double unk_log_prob) {
  if (sentences.empty()) throw DataError("cannot evaluate an empty corpus");
  std::vector<double> totals;
  totals.reserve(sentences.size());
  EvalReport r;
  for (const ScoredSentence& s : sentences) {
    if (s.unknown.size() != s.log_probs.size()) throw DataError("unknown-word flags do not match the sentence");
    double sum = 0.0;
    for (double lp : s.log_probs) sum += lp;
    totals.push_back(sum);
    r.word_count += s.log_probs.size();
    r.unk_count += static_cast<std::size_t>(std::count(s.unknown.begin(), s.unknown.end(), true));
  }
  if (r.word_count == 0) throw DataError("cannot evaluate a corpus without tokens");
  std::sort(totals.begin(), totals.end());
  for (double t : totals) r.total_log_likelihood += t;
  r.unk_log_portion = r.unk_count == 0 ? 0.0 : static_cast<double>(r.unk_count) * unk_log_prob;
  r.per_word_ll = r.total_log_likelihood / static_cast<double>(r.word_count);
  r.perplexity = std::exp(-r.per_word_ll);
  return r;
}

EvalReport evaluate(const NGramModel& model, std::span<const Sentence> corpus) {
  const double unk_lp = -std::log(static_cast<double>(model.vocab().v_all()));
  std::vector<ScoredSentence> scored;
  scored.reserve(corpus.size());
  for (const Sentence& s : corpus) scored.push_back(mark_unknowns(s, model.token_log_probs(s)));
  return summarize(scored, unk_lp);
}

EvalReport evaluate(const LogLinearLM& model, std::span<const Sentence> corpus) {
  return evaluate_class_model(corpus, model.vocab().v_all(),
                              [&](const Sentence& s) { return model.token_log_probs(s); });
}

EvalReport evaluate(const FFNNLM& model, std::span<const Sentence> corpus) {
  return evaluate_class_model(corpus, model.vocab().v_all(),
                              [&](const Sentence& s) { return model.token_log_probs(s); });
}

EvalReport evaluate(const RnnLM& model, std::span<const Sentence> corpus) {
  return evaluate_class_model(corpus, model.vocab().v_all(),
                              [&](const Sentence& s) { return model.token_log_probs(s); });
}

EvalReport evaluate(const EncDecModel& model, std::span<const SentencePair> pairs) {
  const double unk_lp = -std::log(static_cast<double>(model.target_vocab().v_all()));
  std::vector<ScoredSentence> scored;
  scored.reserve(pairs.size());
  for (const SentencePair& p : pairs) {
    scored.push_back(mark_unknowns(p.target, model.token_log_probs(p.source, p.target)));
    spell_unknowns(scored.back(), unk_lp);
  }
  return summarize(scored, unk_lp);
}

void write_report(std::ostream& out, const EvalReport& r) {
  const auto old = out.precision(12);
  out << "total_log_likelihood\t" << r.total_log_likelihood << '\n'
      << "word_count\t" << r.word_count << '\n'
      << "per_word_ll\t" << r.per_word_ll << '\n'
      << "perplexity\t" << r.perplexity << '\n'
      << "unk_count\t" << r.unk_count << '\n'
      << "unk_log_portion\t" << r.unk_log_portion << '\n';
  out.precision(old);
}

namespace {

using NGramCounts = std::map<std::vector<std::string>, std::size_t>;

NGramCounts count_ngrams(const std::vector<std::string>& words, std::size_t n) {
  NGramCounts counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    ++counts[std::vector<std::string>(words.begin() + i, words.begin() + i + n)];
  }
  return counts;
}

}  // namespace

BleuReport bleu(std::span<const std::vector<std::string>> hypotheses,
                std::span<const std::vector<std::string>> references, std::size_t max_n) {
  if (hypotheses.empty()) throw DataError("BLEU needs at least one hypothesis");
  if (hypotheses.size() != references.size()) {
    throw DataError("BLEU: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                    std::to_string(references.size()) + " references");
  }
  if (max_n == 0) throw ConfigError("BLEU order must be positive");

  std::vector<std::size_t> matched(max_n, 0), proposed(max_n, 0);
  BleuReport r;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    r.hyp_length += hypotheses[i].size();
    r.ref_length += references[i].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NGramCounts hyp = count_ngrams(hypotheses[i], n);
      const NGramCounts ref = count_ngrams(references[i], n);
      for (const auto& [gram, c] : hyp) {
        const auto it = ref.find(gram);
        matched[n - 1] += std::min(c, it == ref.end() ? std::size_t{0} : it->second);
        proposed[n - 1] += c;
      }
    }
  }

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < max_n; ++n) {
    const double p = proposed[n] == 0 ? 0.0 : static_cast<double>(matched[n]) / static_cast<double>(proposed[n]);
    r.precisions.push_back(p);
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }
  if (r.hyp_length == 0) {
    r.brevity_penalty = 0.0;
  } else {
    r.brevity_penalty = std::min(1.0, std::exp(1.0 - static_cast<double>(r.ref_length) /
                                                         static_cast<double>(r.hyp_length)));
  }
  r.bleu = zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / static_cast<double>(max_n));
  return r;
}

BleuReport bleu_lines(std::span<const std::string> hypotheses, std::span<const std::string> references,
                      std::size_t max_n) {
  std::vector<std::vector<std::string>> hyp, ref;
  for (const std::string& line : hypotheses) hyp.push_back(split_tokens(line));
  for (const std::string& line : references) ref.push_back(split_tokens(line));
  return bleu(hyp, ref, max_n);
}

void write_report(std::ostream& out, const BleuReport& r) {
  const auto old = out.precision(12);
  out << "bleu\t" << r.bleu << '\n' << "brevity_penalty\t" << r.brevity_penalty << '\n';
  for (std::size_t n = 0; n < r.precisions.size(); ++n) out << "precision_" << n + 1 << '\t' << r.precisions[n] << '\n';
  out << "hyp_length\t" << r.hyp_length << '\n' << "ref_length\t" << r.ref_length << '\n';
  out.precision(old);
}

}  // namespace s2sw
