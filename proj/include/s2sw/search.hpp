// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Output generation for any model that can score the next token given a
// prefix: ancestral sampling, greedy search, beam search with length
// corrections, and unknown-word replacement through attention.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2sw/corpus.hpp"
#include "s2sw/tensor.hpp"

namespace s2sw {

class NGramModel;
class LogLinearLM;
class FFNNLM;
class RnnLM;
class EncDecModel;
struct SentencePair;

/// Opaque per-hypothesis decoder state owned by a StepModel.
struct DecoderStateBase {
  virtual ~DecoderStateBase() = default;
};
using StateHandle = std::shared_ptr<const DecoderStateBase>;

struct StepResult {
  Tensor log_probs;  // one entry per vocabulary id; -inf marks impossible tokens
  StateHandle state;
  Tensor attention;  // |F| x 1 for attentional models, else empty
};

/// Anything that can be decoded from: unconditional LMs ignore the source.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual bool conditional() const { return false; }
  /// Target vocabulary, if the model has one (used for compatibility checks).
  virtual const Vocabulary* vocabulary() const { return nullptr; }
  virtual StateHandle start(std::span<const TokenId> source) const = 0;
  /// Consumes `prev` (the <s> token at the first step) and scores the next token.
  virtual StepResult step(const StateHandle& state, TokenId prev) const = 0;
};

class NGramStepModel final : public StepModel {
 public:
  explicit NGramStepModel(const NGramModel& model) : model_(model) {}
  std::size_t vocab_size() const override;
  const Vocabulary* vocabulary() const override;
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  const NGramModel& model_;
};

class LogLinearStepModel final : public StepModel {
 public:
  explicit LogLinearStepModel(const LogLinearLM& model) : model_(model) {}
  std::size_t vocab_size() const override;
  const Vocabulary* vocabulary() const override;
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  const LogLinearLM& model_;
};

class FFNNStepModel final : public StepModel {
 public:
  explicit FFNNStepModel(const FFNNLM& model) : model_(model) {}
  std::size_t vocab_size() const override;
  const Vocabulary* vocabulary() const override;
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  const FFNNLM& model_;
};

class RnnStepModel final : public StepModel {
 public:
  explicit RnnStepModel(const RnnLM& model) : model_(model) {}
  std::size_t vocab_size() const override;
  const Vocabulary* vocabulary() const override;
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  const RnnLM& model_;
};

class EncDecStepModel final : public StepModel {
 public:
  explicit EncDecStepModel(const EncDecModel& model) : model_(model) {}
  std::size_t vocab_size() const override;
  bool conditional() const override { return true; }
  const Vocabulary* vocabulary() const override;
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  const EncDecModel& model_;
};

/// Toy model defined by a function from the generated prefix to
/// log-probabilities; used for hand-built and random test models.
class PrefixModel final : public StepModel {
 public:
  using Fn = std::function<Tensor(std::span<const TokenId> prefix)>;
  PrefixModel(std::size_t vocab_size, Fn fn) : vocab_size_(vocab_size), fn_(std::move(fn)) {}
  std::size_t vocab_size() const override { return vocab_size_; }
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  std::size_t vocab_size_;
  Fn fn_;
};

/// Averages member probabilities; each member threads its own state. The
/// attention of the first attentional member is reported.
class EnsembleModel final : public StepModel {
 public:
  /// Throws ConfigError when members disagree on the target vocabulary.
  explicit EnsembleModel(std::vector<const StepModel*> members);
  std::size_t vocab_size() const override { return members_.front()->vocab_size(); }
  bool conditional() const override;
  const Vocabulary* vocabulary() const override { return members_.front()->vocabulary(); }
  StateHandle start(std::span<const TokenId> source) const override;
  StepResult step(const StateHandle& state, TokenId prev) const override;

 private:
  std::vector<const StepModel*> members_;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // includes the final </s> when finished
  double log_prob = 0.0;
  double score = 0.0;  // log_prob after length correction
  StateHandle state;
  bool finished = false;
  bool truncated = false;               // stopped at max_len without </s>
  std::vector<std::size_t> attention;   // argmax source position per step
};

/// Source-length-conditional target-length statistics.
class LengthPrior {
 public:
  enum class Mode { none, multinomial_prior, per_word_normalize };
  static constexpr double kFloor = 1e-9;

  LengthPrior() = default;
  explicit LengthPrior(Mode mode) : mode_(mode) {}

  /// Counts c(|E|, |F|) and c(|F|) with |E| including </s>.
  void observe(std::size_t source_len, std::size_t target_len);
  static LengthPrior from_pairs(std::span<const SentencePair> pairs, Mode mode);

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }
  /// log max(c(|E|,|F|) / c(|F|), kFloor)
  double log_prob(std::size_t target_len, std::size_t source_len) const;
  double rescore(double log_prob, std::size_t target_len, std::size_t source_len) const;

  const std::map<std::pair<std::size_t, std::size_t>, std::size_t>& joint_counts() const { return joint_; }
  const std::map<std::size_t, std::size_t>& source_counts() const { return source_; }

 private:
  Mode mode_ = Mode::none;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint_;  // (|F|, |E|)
  std::map<std::size_t, std::size_t> source_;
};

LengthPrior::Mode parse_length_mode(const std::string& name);
std::string to_string(LengthPrior::Mode m);

/// 2|F| + 10 for conditional models, 100 otherwise.
std::size_t default_max_len(const StepModel& model, std::span<const TokenId> source);

// A max_len of 0 selects default_max_len; the limit counts </s>.

Hypothesis sample(const StepModel& model, std::span<const TokenId> source, std::uint64_t seed, std::size_t max_len);
Hypothesis greedy(const StepModel& model, std::span<const TokenId> source, std::size_t max_len);

struct BeamOptions {
  std::size_t beam = 5;
  std::size_t max_len = 0;  // 0: default_max_len
  LengthPrior length;
};

/// Up to `beam` hypotheses sorted by final score (completed ones, or the
/// single best unfinished one flagged as truncated).
std::vector<Hypothesis> beam_search(const StepModel& model, std::span<const TokenId> source,
                                    const BeamOptions& options);

/// Target strings with every <unk> replaced by the source word the attention
/// peaked on at that step. Throws ConfigError without an attention trace.
std::vector<std::string> replace_unknowns(const Hypothesis& hyp, std::span<const std::string> source_words,
                                          const Vocabulary& target_vocab);

/// "index ||| tokens ||| score" per hypothesis.
void write_nbest(std::ostream& out, std::size_t index, std::span<const Hypothesis> hyps, const Vocabulary& vocab);

}  // namespace s2sw
