// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "s2sw/error.hpp"
#include "s2sw/loglinear.hpp"
#include "s2sw/neural_lm.hpp"
#include "s2sw/ngram.hpp"
#include "s2sw/seq2seq.hpp"

namespace s2sw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Generated words so far; enough state for every fixed-window or
// whole-history model.
struct HistoryState final : DecoderStateBase {
  std::vector<TokenId> history;
  bool started = false;  // the first step consumes <s> without recording it
};

std::shared_ptr<const HistoryState> extend(const StateHandle& state, TokenId prev) {
  const auto& old = static_cast<const HistoryState&>(*state);
  auto next = std::make_shared<HistoryState>(old);
  if (next->started) next->history.push_back(prev);
  next->started = true;
  return next;
}

Tensor log_of(const Tensor& probs) {
  Tensor out = probs;
  for (double& v : out.data()) v = std::log(v);
  return out;
}

struct RnnState final : DecoderStateBase {
  RnnLM::State layers;
};

struct EncDecState final : DecoderStateBase {
  std::shared_ptr<const SourceEncoding> encoding;
  DecoderState decoder;
};

struct EnsembleState final : DecoderStateBase {
  std::vector<StateHandle> members;
};

std::size_t argmax_index(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

}  // namespace

std::size_t NGramStepModel::vocab_size() const { return model_.vocab().size(); }
const Vocabulary* NGramStepModel::vocabulary() const { return &model_.vocab(); }

StateHandle NGramStepModel::start(std::span<const TokenId>) const { return std::make_shared<HistoryState>(); }

StepResult NGramStepModel::step(const StateHandle& state, TokenId prev) const {
  auto next = extend(state, prev);
  const std::size_t keep = model_.order() - 1;
  std::span<const TokenId> context(next->history);
  if (context.size() > keep) context = context.last(keep);
  Tensor lp(vocab_size(), 1);
  for (TokenId v = 0; v < vocab_size(); ++v) lp[v] = std::log(model_.prob(context, v));
  return {std::move(lp), std::move(next), {}};
}

std::size_t LogLinearStepModel::vocab_size() const { return model_.vocab().size(); }
const Vocabulary* LogLinearStepModel::vocabulary() const { return &model_.vocab(); }

StateHandle LogLinearStepModel::start(std::span<const TokenId>) const {
  return std::make_shared<HistoryState>();
}

StepResult LogLinearStepModel::step(const StateHandle& state, TokenId prev) const {
  auto next = extend(state, prev);
  Tensor lp = log_of(model_.probabilities(next->history));
  return {std::move(lp), std::move(next), {}};
}

std::size_t FFNNStepModel::vocab_size() const { return model_.vocab().size(); }
const Vocabulary* FFNNStepModel::vocabulary() const { return &model_.vocab(); }

StateHandle FFNNStepModel::start(std::span<const TokenId>) const { return std::make_shared<HistoryState>(); }

StepResult FFNNStepModel::step(const StateHandle& state, TokenId prev) const {
  auto next = extend(state, prev);
  Tensor lp = log_of(model_.probabilities(next->history));
  return {std::move(lp), std::move(next), {}};
}

std::size_t RnnStepModel::vocab_size() const { return model_.vocab().size(); }
const Vocabulary* RnnStepModel::vocabulary() const { return &model_.vocab(); }

StateHandle RnnStepModel::start(std::span<const TokenId>) const {
  auto s = std::make_shared<RnnState>();
  s->layers = model_.initial_state();
  return s;
}

StepResult RnnStepModel::step(const StateHandle& state, TokenId prev) const {
  auto next = std::make_shared<RnnState>(static_cast<const RnnState&>(*state));
  Tensor lp = model_.step(next->layers, prev);
  return {std::move(lp), std::move(next), {}};
}

std::size_t EncDecStepModel::vocab_size() const { return model_.target_vocab().size(); }
const Vocabulary* EncDecStepModel::vocabulary() const { return &model_.target_vocab(); }

StateHandle EncDecStepModel::start(std::span<const TokenId> source) const {
  auto s = std::make_shared<EncDecState>();
  s->encoding = std::make_shared<const SourceEncoding>(model_.encode(source));
  s->decoder = model_.initial_state(*s->encoding);
  return s;
}

StepResult EncDecStepModel::step(const StateHandle& state, TokenId prev) const {
  const auto& old = static_cast<const EncDecState&>(*state);
  DecodeStep d = model_.decode_step(*old.encoding, old.decoder, prev);
  auto next = std::make_shared<EncDecState>();
  next->encoding = old.encoding;
  next->decoder = std::move(d.next);
  return {std::move(d.log_probs), std::move(next), std::move(d.attention)};
}

StateHandle PrefixModel::start(std::span<const TokenId>) const { return std::make_shared<HistoryState>(); }

StepResult PrefixModel::step(const StateHandle& state, TokenId prev) const {
  auto next = extend(state, prev);
  Tensor lp = fn_(next->history);
  if (lp.size() != vocab_size_) {
    throw ShapeError("prefix model returned " + lp.shape_str() + " for a vocabulary of " +
                     std::to_string(vocab_size_));
  }
  return {std::move(lp), std::move(next), {}};
}

EnsembleModel::EnsembleModel(std::vector<const StepModel*> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("an ensemble needs at least one model");
  const StepModel& first = *members_.front();
  for (const StepModel* m : members_) {
    if (m->vocab_size() != first.vocab_size()) {
      throw ConfigError("ensemble members have different vocabulary sizes (" + std::to_string(first.vocab_size()) +
                        " vs " + std::to_string(m->vocab_size()) + ")");
    }
    if (m->vocabulary() && first.vocabulary() && m->vocabulary()->tokens() != first.vocabulary()->tokens()) {
      throw ConfigError("ensemble members have different target vocabularies");
    }
  }
}

bool EnsembleModel::conditional() const {
  return std::any_of(members_.begin(), members_.end(), [](const StepModel* m) { return m->conditional(); });
}

StateHandle EnsembleModel::start(std::span<const TokenId> source) const {
  auto s = std::make_shared<EnsembleState>();
  for (const StepModel* m : members_) s->members.push_back(m->start(source));
  return s;
}

StepResult EnsembleModel::step(const StateHandle& state, TokenId prev) const {
  const auto& old = static_cast<const EnsembleState&>(*state);
  auto next = std::make_shared<EnsembleState>();
  std::vector<Tensor> lps;
  Tensor attention;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    StepResult r = members_[i]->step(old.members[i], prev);
    next->members.push_back(std::move(r.state));
    if (attention.empty() && !r.attention.empty()) attention = std::move(r.attention);
    lps.push_back(std::move(r.log_probs));
  }
  // log of the mean probability, computed stably per token
  const double log_m = std::log(static_cast<double>(members_.size()));
  Tensor out(vocab_size(), 1);
  for (std::size_t v = 0; v < out.size(); ++v) {
    double hi = kNegInf;
    for (const Tensor& lp : lps) hi = std::max(hi, lp[v]);
    if (hi == kNegInf) {
      out[v] = kNegInf;
      continue;
    }
    double sum = 0.0;
    for (const Tensor& lp : lps) sum += std::exp(lp[v] - hi);
    out[v] = hi + std::log(sum) - log_m;
  }
  return {std::move(out), std::move(next), std::move(attention)};
}

void LengthPrior::observe(std::size_t source_len, std::size_t target_len) {
  ++joint_[{source_len, target_len}];
  ++source_[source_len];
}

LengthPrior LengthPrior::from_pairs(std::span<const SentencePair> pairs, Mode mode) {
  LengthPrior p(mode);
  for (const SentencePair& pair : pairs) p.observe(pair.source.size(), pair.target.size());
  return p;
}

double LengthPrior::log_prob(std::size_t target_len, std::size_t source_len) const {
  double p = 0.0;
  const auto src = source_.find(source_len);
  if (src != source_.end()) {
    const auto joint = joint_.find({source_len, target_len});
    if (joint != joint_.end()) p = static_cast<double>(joint->second) / static_cast<double>(src->second);
  }
  return std::log(std::max(p, kFloor));
}

double LengthPrior::rescore(double log_prob, std::size_t target_len, std::size_t source_len) const {
  switch (mode_) {
    case Mode::none:
      return log_prob;
    case Mode::multinomial_prior:
      return log_prob + this->log_prob(target_len, source_len);
    case Mode::per_word_normalize:
      return target_len == 0 ? log_prob : log_prob / static_cast<double>(target_len);
  }
  return log_prob;
}

LengthPrior::Mode parse_length_mode(const std::string& name) {
  if (name == "none") return LengthPrior::Mode::none;
  if (name == "multinomial" || name == "prior") return LengthPrior::Mode::multinomial_prior;
  if (name == "per_word" || name == "normalize") return LengthPrior::Mode::per_word_normalize;
  throw ConfigError("unknown length mode '" + name + "' (expected none, multinomial or per_word)");
}

std::string to_string(LengthPrior::Mode m) {
  switch (m) {
    case LengthPrior::Mode::none:
      return "none";
    case LengthPrior::Mode::multinomial_prior:
      return "multinomial";
    case LengthPrior::Mode::per_word_normalize:
      return "per_word";
  }
  return "none";
}

std::size_t default_max_len(const StepModel& model, std::span<const TokenId> source) {
  return model.conditional() ? 2 * source.size() + 10 : 100;
}

namespace {

std::size_t resolve_max_len(const StepModel& model, std::span<const TokenId> source, std::size_t max_len) {
  return max_len == 0 ? default_max_len(model, source) : max_len;
}

void append(Hypothesis& h, TokenId tok, double lp, const StepResult& r) {
  h.tokens.push_back(tok);
  h.log_prob += lp;
  if (!r.attention.empty()) h.attention.push_back(argmax_index(r.attention));
  if (tok == kEos) h.finished = true;
}

}  // namespace

Hypothesis sample(const StepModel& model, std::span<const TokenId> source, std::uint64_t seed, std::size_t max_len) {
  max_len = resolve_max_len(model, source, max_len);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Hypothesis h;
  h.state = model.start(source);
  TokenId prev = kBos;
  std::vector<double> weights;
  while (!h.finished && h.tokens.size() < max_len) {
    StepResult r = model.step(h.state, prev);
    double hi = kNegInf;
    for (double lp : r.log_probs.data()) hi = std::max(hi, lp);
    if (hi == kNegInf) throw DataError("model assigns zero probability to every token");
    weights.assign(r.log_probs.size(), 0.0);
    double total = 0.0;
    for (std::size_t v = 0; v < weights.size(); ++v) total += weights[v] = std::exp(r.log_probs[v] - hi);
    double u = unit(rng) * total;
    TokenId tok = 0;
    for (std::size_t v = 0; v < weights.size(); ++v) {
      if (weights[v] == 0.0) continue;
      tok = static_cast<TokenId>(v);
      if (u < weights[v]) break;
      u -= weights[v];
    }
    append(h, tok, r.log_probs[tok], r);
    h.state = std::move(r.state);
    prev = tok;
  }
  h.truncated = !h.finished;
  h.score = h.log_prob;
  return h;
}

Hypothesis greedy(const StepModel& model, std::span<const TokenId> source, std::size_t max_len) {
  max_len = resolve_max_len(model, source, max_len);
  Hypothesis h;
  h.state = model.start(source);
  TokenId prev = kBos;
  while (!h.finished && h.tokens.size() < max_len) {
    StepResult r = model.step(h.state, prev);
    const auto tok = static_cast<TokenId>(argmax_index(r.log_probs));
    if (r.log_probs[tok] == kNegInf) throw DataError("model assigns zero probability to every token");
    append(h, tok, r.log_probs[tok], r);
    h.state = std::move(r.state);
    prev = tok;
  }
  h.truncated = !h.finished;
  h.score = h.log_prob;
  return h;
}

namespace {

// Higher score first, then the lexicographically smaller token sequence, then
// the shorter one.
bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  const std::size_t n = std::min(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.tokens[i] != b.tokens[i]) return a.tokens[i] < b.tokens[i];
  }
  return a.tokens.size() < b.tokens.size();
}

}  // namespace

std::vector<Hypothesis> beam_search(const StepModel& model, std::span<const TokenId> source,
                                    const BeamOptions& options) {
  if (options.beam == 0) throw ConfigError("beam size must be positive");
  const std::size_t max_len = resolve_max_len(model, source, options.max_len);
  const std::size_t beam = options.beam;

  std::vector<Hypothesis> active(1);
  active[0].state = model.start(source);
  std::vector<Hypothesis> completed;

  struct Candidate {
    double log_prob;
    std::size_t parent;
    TokenId token;
  };
  std::vector<Candidate> candidates;
  std::vector<StepResult> expansions;

  for (std::size_t t = 0; t < max_len && !active.empty() && completed.size() < beam; ++t) {
    candidates.clear();
    expansions.clear();
    for (std::size_t i = 0; i < active.size(); ++i) {
      const TokenId prev = active[i].tokens.empty() ? kBos : active[i].tokens.back();
      expansions.push_back(model.step(active[i].state, prev));
      const Tensor& lp = expansions.back().log_probs;
      for (std::size_t v = 0; v < lp.size(); ++v) {
        if (lp[v] == kNegInf || std::isnan(lp[v])) continue;
        candidates.push_back({active[i].log_prob + lp[v], i, static_cast<TokenId>(v)});
      }
    }
    const std::size_t keep = std::min(beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = candidates[k];
      const StepResult& r = expansions[c.parent];
      Hypothesis h = active[c.parent];
      append(h, c.token, r.log_probs[c.token], r);
      h.log_prob = c.log_prob;
      h.state = r.state;
      if (h.finished) {
        h.state.reset();
        completed.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    active = std::move(next);
  }

  std::vector<Hypothesis>& pool = completed;
  if (pool.empty()) {
    if (active.empty()) return {};
    for (Hypothesis& h : active) h.score = h.log_prob;
    auto best = std::min_element(active.begin(), active.end(), ranks_before);
    best->truncated = true;
    pool.push_back(std::move(*best));
  }
  // The candidate set is chosen by raw log probability; length modes only reorder it.
  if (pool.size() > beam) {
    for (Hypothesis& h : pool) h.score = h.log_prob;
    std::sort(pool.begin(), pool.end(), ranks_before);
    pool.resize(beam);
  }
  for (Hypothesis& h : pool) {
    h.score = h.truncated ? h.log_prob : options.length.rescore(h.log_prob, h.tokens.size(), source.size());
  }
  std::sort(pool.begin(), pool.end(), ranks_before);
  return std::move(pool);
}

std::vector<std::string> replace_unknowns(const Hypothesis& hyp, std::span<const std::string> source_words,
                                          const Vocabulary& target_vocab) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < hyp.tokens.size(); ++t) {
    const TokenId tok = hyp.tokens[t];
    if (tok == kEos && t + 1 == hyp.tokens.size()) break;
    if (tok != kUnk) {
      out.push_back(target_vocab.token(tok));
      continue;
    }
    if (t >= hyp.attention.size()) throw ConfigError("unknown-word replacement needs an attentional model");
    const std::size_t j = hyp.attention[t];
    if (j >= source_words.size()) {
      throw DataError("attention points at source position " + std::to_string(j) + " of a " +
                      std::to_string(source_words.size()) + "-word sentence");
    }
    out.push_back(source_words[j]);
  }
  return out;
}

void write_nbest(std::ostream& out, std::size_t index, std::span<const Hypothesis> hyps, const Vocabulary& vocab) {
  const auto old = out.precision(10);
  for (const Hypothesis& h : hyps) out << index << " ||| " << decode(vocab, h.tokens) << " ||| " << h.score << '\n';
  out.precision(old);
}

}  // namespace s2sw
