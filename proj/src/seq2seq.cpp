// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/seq2seq.hpp"

#include <algorithm>
#include <random>

#include "s2sw/error.hpp"

namespace s2sw {

EncoderDirection parse_encoder_direction(const std::string& name) {
  if (name == "forward") return EncoderDirection::forward;
  if (name == "reverse") return EncoderDirection::reverse;
  if (name == "bidirectional" || name == "bidir") return EncoderDirection::bidirectional;
  throw ConfigError("unknown encoder direction '" + name + "'");
}

BridgeKind parse_bridge_kind(const std::string& name) {
  if (name == "final_state" || name == "final") return BridgeKind::final_state;
  if (name == "concat") return BridgeKind::concat;
  if (name == "tanh") return BridgeKind::tanh;
  throw ConfigError("unknown bridge kind '" + name + "'");
}

AttentionKind parse_attention_kind(const std::string& name) {
  if (name == "none") return AttentionKind::none;
  if (name == "dot") return AttentionKind::dot;
  if (name == "bilinear") return AttentionKind::bilinear;
  if (name == "mlp") return AttentionKind::mlp;
  throw ConfigError("unknown attention kind '" + name + "'");
}

std::string to_string(EncoderDirection d) {
  switch (d) {
    case EncoderDirection::forward: return "forward";
    case EncoderDirection::reverse: return "reverse";
    case EncoderDirection::bidirectional: return "bidirectional";
  }
  return "";
}

std::string to_string(BridgeKind b) {
  switch (b) {
    case BridgeKind::final_state: return "final_state";
    case BridgeKind::concat: return "concat";
    case BridgeKind::tanh: return "tanh";
  }
  return "";
}

std::string to_string(AttentionKind a) {
  switch (a) {
    case AttentionKind::none: return "none";
    case AttentionKind::dot: return "dot";
    case AttentionKind::bilinear: return "bilinear";
    case AttentionKind::mlp: return "mlp";
  }
  return "";
}

namespace {

void check_ids(std::span<const TokenId> ids, const Vocabulary& vocab, const char* side) {
  for (TokenId id : ids) {
    if (id >= vocab.size()) {
      throw DataError(std::string(side) + " token id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

}  // namespace

EncDecModel::EncDecModel(Vocabulary source_vocab, Vocabulary target_vocab, EncDecConfig config, std::uint64_t seed)
    : source_vocab_(std::move(source_vocab)), target_vocab_(std::move(target_vocab)), config_(config) {
  validate();
  std::mt19937_64 rng(seed);
  const auto& c = config_;
  const bool bidir = c.direction == EncoderDirection::bidirectional;

  source_embed_ = &params_.add("M_f", c.embed, source_vocab_.size());
  fill_uniform(source_embed_->value, -0.1, 0.1, rng);
  target_embed_ = &params_.add("M_e", c.embed, target_vocab_.size());
  fill_uniform(target_embed_->value, -0.1, 0.1, rng);

  if (bidir) {
    encoders_.emplace_back(params_, "enc_fwd", c.cell, c.layers, c.embed, c.enc_hidden, false, rng);
    encoders_.emplace_back(params_, "enc_bwd", c.cell, c.layers, c.embed, c.enc_hidden, false, rng);
  } else {
    encoders_.emplace_back(params_, "enc", c.cell, c.layers, c.embed, c.enc_hidden, false, rng);
  }
  const std::size_t dec_input = c.embed + (c.attention == AttentionKind::none ? 0 : encoding_size());
  decoder_.emplace_back(params_, "dec", c.cell, c.layers, dec_input, c.dec_hidden, false, rng);

  if (c.bridge == BridgeKind::tanh) {
    for (std::size_t l = 0; l < c.layers; ++l) {
      const std::string p = "bridge/l" + std::to_string(l);
      BridgeParams b;
      b.w_fwd = &params_.add(p + (bidir ? "/W_fwd" : "/W_final"), c.dec_hidden, c.enc_hidden);
      fill_glorot(b.w_fwd->value, rng);
      if (bidir) {
        b.w_bwd = &params_.add(p + "/W_bwd", c.dec_hidden, c.enc_hidden);
        fill_glorot(b.w_bwd->value, rng);
      }
      b.b = &params_.add(p + "/b", c.dec_hidden, 1);
      bridge_.push_back(b);
    }
  }

  switch (c.attention) {
    case AttentionKind::none:
    case AttentionKind::dot:
      break;
    case AttentionKind::bilinear:
      attn_w_a_ = &params_.add("attn/W_a", c.dec_hidden, encoding_size());
      fill_glorot(attn_w_a_->value, rng);
      break;
    case AttentionKind::mlp:
      attn_w_ah_ = &params_.add("attn/W_ah", c.attention_hidden, c.dec_hidden);
      attn_w_af_ = &params_.add("attn/W_af", c.attention_hidden, encoding_size());
      attn_w_a2_ = &params_.add("attn/w_a2", c.attention_hidden, 1);
      fill_glorot(attn_w_ah_->value, rng);
      fill_glorot(attn_w_af_->value, rng);
      fill_glorot(attn_w_a2_->value, rng);
      break;
  }

  const std::size_t out_in = c.dec_hidden + (c.attention == AttentionKind::none ? 0 : encoding_size());
  w_hs_ = &params_.add("W_hs", target_vocab_.size(), out_in);
  fill_glorot(w_hs_->value, rng);
  b_s_ = &params_.add("b_s", target_vocab_.size(), 1);
}

void EncDecModel::validate() const {
  const auto& c = config_;
  if (c.layers == 0 || c.embed == 0 || c.enc_hidden == 0 || c.dec_hidden == 0) {
    throw ConfigError("encoder-decoder sizes must be positive");
  }
  const bool bidir = c.direction == EncoderDirection::bidirectional;
  switch (c.bridge) {
    case BridgeKind::final_state:
      if (bidir) throw ConfigError("final_state bridge needs a unidirectional encoder; use concat or tanh");
      if (c.dec_hidden != c.enc_hidden) {
        throw ConfigError("final_state bridge needs decoder hidden size " + std::to_string(c.dec_hidden) +
                          " to equal encoder hidden size " + std::to_string(c.enc_hidden));
      }
      break;
    case BridgeKind::concat:
      if (!bidir) throw ConfigError("concat bridge needs a bidirectional encoder");
      if (c.dec_hidden != 2 * c.enc_hidden) {
        throw ConfigError("concat bridge needs decoder hidden size " + std::to_string(c.dec_hidden) +
                          " to equal twice the encoder hidden size " + std::to_string(c.enc_hidden));
      }
      break;
    case BridgeKind::tanh:
      break;
  }
  if (c.attention == AttentionKind::dot && c.dec_hidden != encoding_size()) {
    throw ConfigError("dot attention needs decoder hidden size " + std::to_string(c.dec_hidden) +
                      " to equal source encoding size " + std::to_string(encoding_size()));
  }
  if (c.attention == AttentionKind::mlp && c.attention_hidden == 0) {
    throw ConfigError("mlp attention hidden size must be positive");
  }
}

std::size_t EncDecModel::encoding_size() const {
  return config_.direction == EncoderDirection::bidirectional ? 2 * config_.enc_hidden : config_.enc_hidden;
}

std::vector<RecurrentState> EncDecModel::bridge(ComputationGraph& cg, const std::vector<RecurrentState>& fwd,
                                                const std::vector<RecurrentState>& bwd) const {
  std::vector<RecurrentState> init;
  const bool bidir = !bwd.empty();
  for (std::size_t l = 0; l < config_.layers; ++l) {
    RecurrentState s;
    s.has_cell = has_cell_state(config_.cell);
    switch (config_.bridge) {
      case BridgeKind::final_state:
        s = fwd[l];
        break;
      case BridgeKind::concat:
        s.h = concat_rows({bwd[l].h, fwd[l].h});
        if (s.has_cell) s.c = concat_rows({bwd[l].c, fwd[l].c});
        break;
      case BridgeKind::tanh: {
        const BridgeParams& b = bridge_[l];
        Expr pre = cg.parameter(*b.w_fwd) * fwd[l].h;
        if (bidir) pre = pre + cg.parameter(*b.w_bwd) * bwd[l].h;
        s.h = tanh(pre + cg.parameter(*b.b));
        if (s.has_cell) s.c = cg.input(Tensor(config_.dec_hidden, 1));
        break;
      }
    }
    init.push_back(s);
  }
  return init;
}

EncDecModel::EncodedExprs EncDecModel::encode(ComputationGraph& cg, std::span<const TokenId> source) const {
  if (source.empty()) throw DataError("empty source sentence");
  check_ids(source, source_vocab_, "source");
  const std::size_t n = source.size();
  std::vector<Expr> emb;
  emb.reserve(n);
  for (TokenId id : source) emb.push_back(cg.lookup(*source_embed_, id));

  struct Run {
    std::vector<Expr> outputs;  // aligned with source positions
    std::vector<RecurrentState> final_state;
  };
  auto run = [&](const StackedRNN& rnn, bool reverse) {
    Run r;
    r.outputs.resize(n);
    auto state = rnn.initial_state(cg);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = reverse ? n - 1 - k : k;
      state = rnn.step(cg, emb[i], state, &r.outputs[i]);
    }
    r.final_state = std::move(state);
    return r;
  };

  EncodedExprs enc;
  enc.length = n;
  switch (config_.direction) {
    case EncoderDirection::forward:
    case EncoderDirection::reverse: {
      const Run r = run(encoders_[0], config_.direction == EncoderDirection::reverse);
      enc.columns = concat_cols(r.outputs);
      enc.decoder_init = bridge(cg, r.final_state, {});
      break;
    }
    case EncoderDirection::bidirectional: {
      const Run f = run(encoders_[0], false);
      const Run b = run(encoders_[1], true);
      std::vector<Expr> cols;
      cols.reserve(n);
      for (std::size_t i = 0; i < n; ++i) cols.push_back(concat_rows({b.outputs[i], f.outputs[i]}));
      enc.columns = concat_cols(cols);
      enc.decoder_init = bridge(cg, f.final_state, b.final_state);
      break;
    }
  }
  if (config_.attention == AttentionKind::bilinear) {
    enc.projection = cg.parameter(*attn_w_a_) * enc.columns;
    enc.has_projection = true;
  } else if (config_.attention == AttentionKind::mlp) {
    enc.projection = cg.parameter(*attn_w_af_) * enc.columns;
    enc.has_projection = true;
  }
  return enc;
}

Expr EncDecModel::attention_scores(ComputationGraph& cg, const EncodedExprs& enc, Expr h) const {
  switch (config_.attention) {
    case AttentionKind::dot:
      return transpose(h) * enc.columns;
    case AttentionKind::bilinear:
      return transpose(h) * enc.projection;
    case AttentionKind::mlp:
      return transpose(cg.parameter(*attn_w_a2_)) * tanh(enc.projection + cg.parameter(*attn_w_ah_) * h);
    case AttentionKind::none:
      break;
  }
  throw ConfigError("model has no attention");
}

Expr EncDecModel::attention_score_column(ComputationGraph& cg, Expr column, Expr h) const {
  switch (config_.attention) {
    case AttentionKind::dot:
      return transpose(h) * column;
    case AttentionKind::bilinear:
      return transpose(h) * (cg.parameter(*attn_w_a_) * column);
    case AttentionKind::mlp:
      return transpose(cg.parameter(*attn_w_a2_)) *
             tanh(cg.parameter(*attn_w_af_) * column + cg.parameter(*attn_w_ah_) * h);
    case AttentionKind::none:
      break;
  }
  throw ConfigError("model has no attention");
}

EncDecModel::StepExprs EncDecModel::step(ComputationGraph& cg, const EncodedExprs& enc,
                                         const std::vector<RecurrentState>& state, Expr context,
                                         TokenId prev) const {
  if (prev >= target_vocab_.size()) throw DataError("target token id " + std::to_string(prev) + " outside vocabulary");
  StepExprs out;
  Expr x = cg.lookup(*target_embed_, prev);
  const bool attend = config_.attention != AttentionKind::none;
  if (attend) x = concat_rows({x, context});
  Expr h;
  out.state = decoder_[0].step(cg, x, state, &h);
  if (attend) {
    out.alpha = softmax(transpose(attention_scores(cg, enc, h)));
    out.context = enc.columns * out.alpha;
    out.scores = cg.parameter(*w_hs_) * concat_rows({h, out.context}) + cg.parameter(*b_s_);
  } else {
    out.scores = cg.parameter(*w_hs_) * h + cg.parameter(*b_s_);
  }
  return out;
}

Expr EncDecModel::sentence_loss(ComputationGraph& cg, std::span<const TokenId> source,
                                std::span<const TokenId> target) const {
  if (target.empty()) throw DataError("empty target sentence");
  check_ids(target, target_vocab_, "target");
  const EncodedExprs enc = encode(cg, source);
  auto state = enc.decoder_init;
  Expr context;
  if (config_.attention != AttentionKind::none) context = cg.input(Tensor(encoding_size(), 1));
  std::vector<Expr> terms;
  TokenId prev = kBos;
  for (TokenId tok : target) {
    StepExprs s = step(cg, enc, state, context, prev);
    terms.push_back(pick_neg_log_softmax(s.scores, tok));
    state = std::move(s.state);
    context = s.context;
    prev = tok;
  }
  return sum(terms);
}

SourceEncoding EncDecModel::encode(std::span<const TokenId> source) const {
  ComputationGraph cg;
  const EncodedExprs enc = encode(cg, source);
  SourceEncoding out;
  out.columns = cg.forward(enc.columns);
  if (enc.has_projection) out.projection = cg.forward(enc.projection);
  out.decoder_init = StackedRNN::values_of(cg, enc.decoder_init);
  return out;
}

DecoderState EncDecModel::initial_state(const SourceEncoding& encoding) const {
  DecoderState s;
  s.layers = encoding.decoder_init;
  if (config_.attention != AttentionKind::none) s.context = Tensor(encoding_size(), 1);
  return s;
}

DecodeStep EncDecModel::decode_step(const SourceEncoding& encoding, const DecoderState& state, TokenId prev) const {
  ComputationGraph cg;
  EncodedExprs enc;
  enc.columns = cg.input(encoding.columns);
  enc.length = encoding.columns.cols();
  if (encoding.projection.size()) {
    enc.projection = cg.input(encoding.projection);
    enc.has_projection = true;
  }
  const bool attend = config_.attention != AttentionKind::none;
  Expr context;
  if (attend) context = cg.input(state.context);
  const StepExprs s = step(cg, enc, decoder_[0].state_from(cg, state.layers), context, prev);
  DecodeStep out;
  out.log_probs = log_softmax(cg.forward(s.scores));
  out.next.layers = StackedRNN::values_of(cg, s.state);
  if (attend) {
    out.next.context = cg.forward(s.context);
    out.attention = cg.forward(s.alpha);
  }
  return out;
}

std::vector<double> EncDecModel::token_log_probs(std::span<const TokenId> source,
                                                 std::span<const TokenId> target) const {
  check_ids(target, target_vocab_, "target");
  ComputationGraph cg;
  const EncodedExprs enc = encode(cg, source);
  auto state = enc.decoder_init;
  Expr context;
  if (config_.attention != AttentionKind::none) context = cg.input(Tensor(encoding_size(), 1));
  std::vector<double> out;
  TokenId prev = kBos;
  for (TokenId tok : target) {
    StepExprs s = step(cg, enc, state, context, prev);
    out.push_back(log_softmax(cg.forward(s.scores))[tok]);
    state = std::move(s.state);
    context = s.context;
    prev = tok;
  }
  return out;
}

HeldOutScore EncDecModel::score_corpus(std::span<const SentencePair> pairs) const {
  HeldOutScore s;
  for (const auto& p : pairs) {
    for (double lp : token_log_probs(p.source, p.target)) s.log_likelihood += lp;
    s.words += p.target.size();
  }
  return s;
}

TrainLog train_encdec(EncDecModel& model, std::span<const SentencePair> train, std::span<const SentencePair> dev,
                      const TrainSchedule& schedule) {
  if (schedule.batch_size == 0) throw ConfigError("batch size must be positive");
  const std::size_t units = (train.size() + schedule.batch_size - 1) / schedule.batch_size;
  auto loss = [&](ComputationGraph& cg, std::size_t u) {
    const std::size_t begin = u * schedule.batch_size;
    const std::size_t end = std::min(train.size(), begin + schedule.batch_size);
    std::vector<Expr> terms;
    for (std::size_t i = begin; i < end; ++i) terms.push_back(model.sentence_loss(cg, train[i].source, train[i].target));
    return sum(terms);
  };
  std::function<HeldOutScore()> dev_score;
  if (!dev.empty()) dev_score = [&] { return model.score_corpus(dev); };
  return train_units(model.params(), units, loss, dev_score, schedule);
}

}  // namespace s2sw
