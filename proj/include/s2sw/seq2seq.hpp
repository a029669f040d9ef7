// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conditional models P(E | F): an encoder reads the source sentence, a
// decoder generates the target one word at a time. Encoders run forward,
// reverse or in both directions; the decoder start state comes from the final
// encoder state, the two concatenated final states, or a tanh bridge layer;
// the optional attention reads a weighted mix of per-word source encodings.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2sw/corpus.hpp"
#include "s2sw/graph.hpp"
#include "s2sw/parameters.hpp"
#include "s2sw/recurrent.hpp"
#include "s2sw/training.hpp"

namespace s2sw {

enum class EncoderDirection { forward, reverse, bidirectional };
enum class BridgeKind { final_state, concat, tanh };
enum class AttentionKind { none, dot, bilinear, mlp };

EncoderDirection parse_encoder_direction(const std::string& name);
BridgeKind parse_bridge_kind(const std::string& name);
AttentionKind parse_attention_kind(const std::string& name);
std::string to_string(EncoderDirection d);
std::string to_string(BridgeKind b);
std::string to_string(AttentionKind a);

struct EncDecConfig {
  CellKind cell = CellKind::lstm_forget;
  std::size_t layers = 1;
  std::size_t embed = 64;
  std::size_t enc_hidden = 128;
  std::size_t dec_hidden = 128;
  EncoderDirection direction = EncoderDirection::bidirectional;
  BridgeKind bridge = BridgeKind::tanh;
  AttentionKind attention = AttentionKind::mlp;
  std::size_t attention_hidden = 64;  // mlp only
};

struct SentencePair {
  Sentence source;  // no </s>
  Sentence target;  // </s>-terminated
};

/// Source side of one sentence, evaluated to plain tensors so decoding
/// sessions can share it.
struct SourceEncoding {
  Tensor columns;     // H_f: one column per source word
  Tensor projection;  // attention-specific transform of H_f (empty if unused)
  std::vector<StateValues> decoder_init;
};

struct DecoderState {
  std::vector<StateValues> layers;
  Tensor context;  // previous attention context; empty without attention
};

struct DecodeStep {
  Tensor log_probs;  // |V_e| x 1
  DecoderState next;
  Tensor attention;  // |F| x 1; empty without attention
};

class EncDecModel {
 public:
  /// Throws ConfigError on inconsistent sizes (e.g. dot attention between
  /// encodings and decoder states of different dimension).
  EncDecModel(Vocabulary source_vocab, Vocabulary target_vocab, EncDecConfig config, std::uint64_t seed = 42);

  const Vocabulary& source_vocab() const { return source_vocab_; }
  const Vocabulary& target_vocab() const { return target_vocab_; }
  const EncDecConfig& config() const { return config_; }
  ParameterCollection& params() { return params_; }
  const ParameterCollection& params() const { return params_; }

  /// Rows of H_f: enc_hidden, or 2 * enc_hidden for bidirectional encoders.
  std::size_t encoding_size() const;

  /// Negative log likelihood of E given F, summed over target words incl. </s>.
  Expr sentence_loss(ComputationGraph& cg, std::span<const TokenId> source, std::span<const TokenId> target) const;

  SourceEncoding encode(std::span<const TokenId> source) const;
  DecoderState initial_state(const SourceEncoding& encoding) const;
  DecodeStep decode_step(const SourceEncoding& encoding, const DecoderState& state, TokenId prev) const;

  std::vector<double> token_log_probs(std::span<const TokenId> source, std::span<const TokenId> target) const;
  HeldOutScore score_corpus(std::span<const SentencePair> pairs) const;

  /// Graph-level pieces, exposed for inspection and tests.
  struct EncodedExprs {
    Expr columns;
    Expr projection;
    bool has_projection = false;
    std::vector<RecurrentState> decoder_init;
    std::size_t length = 0;
  };
  EncodedExprs encode(ComputationGraph& cg, std::span<const TokenId> source) const;
  /// 1 x |F| attention scores of decoder state `h` against every column.
  Expr attention_scores(ComputationGraph& cg, const EncodedExprs& enc, Expr h) const;
  /// Score of `h` against a single encoding column, computed on its own.
  Expr attention_score_column(ComputationGraph& cg, Expr column, Expr h) const;

 private:
  struct StepExprs {
    Expr scores;
    std::vector<RecurrentState> state;
    Expr context;
    Expr alpha;
  };
  StepExprs step(ComputationGraph& cg, const EncodedExprs& enc, const std::vector<RecurrentState>& state,
                 Expr context, TokenId prev) const;
  std::vector<RecurrentState> bridge(ComputationGraph& cg, const std::vector<RecurrentState>& fwd,
                                     const std::vector<RecurrentState>& bwd) const;
  void validate() const;

  Vocabulary source_vocab_;
  Vocabulary target_vocab_;
  EncDecConfig config_;
  ParameterCollection params_;
  Parameter* source_embed_ = nullptr;
  Parameter* target_embed_ = nullptr;
  std::vector<StackedRNN> encoders_;  // one, or {forward, backward}
  std::vector<StackedRNN> decoder_;   // exactly one
  struct BridgeParams {
    Parameter* w_fwd = nullptr;  // final forward (or only) encoder state
    Parameter* w_bwd = nullptr;  // final backward state, bidirectional only
    Parameter* b = nullptr;
  };
  std::vector<BridgeParams> bridge_;  // tanh bridge, one per layer
  Parameter* attn_w_a_ = nullptr;     // bilinear
  Parameter* attn_w_ah_ = nullptr;    // mlp, decoder side
  Parameter* attn_w_af_ = nullptr;    // mlp, source side
  Parameter* attn_w_a2_ = nullptr;    // mlp, second layer
  Parameter* w_hs_ = nullptr;
  Parameter* b_s_ = nullptr;
};

/// Per-pair loss summed over groups of schedule.batch_size pairs, shuffled
/// per epoch, dev likelihood after every epoch.
TrainLog train_encdec(EncDecModel& model, std::span<const SentencePair> train, std::span<const SentencePair> dev,
                      const TrainSchedule& schedule);

}  // namespace s2sw
