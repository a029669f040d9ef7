// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/neural_lm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "s2sw/error.hpp"
#include "s2sw/optimizer.hpp"

namespace s2sw {

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "tanh") return Nonlinearity::tanh;
  if (name == "relu") return Nonlinearity::relu;
  throw ConfigError("unknown nonlinearity '" + name + "'");
}

std::string to_string(Nonlinearity n) { return n == Nonlinearity::tanh ? "tanh" : "relu"; }

namespace {

constexpr double kEmbedInitRange = 0.1;

Parameter& add_embeddings(ParameterCollection& params, const std::string& name, std::size_t dim,
                          std::size_t vocab, std::mt19937_64& rng) {
  Parameter& p = params.add(name, dim, vocab);
  fill_uniform(p.value, -kEmbedInitRange, kEmbedInitRange, rng);
  return p;
}

Parameter& add_glorot(ParameterCollection& params, const std::string& name, std::size_t rows, std::size_t cols,
                      std::mt19937_64& rng) {
  Parameter& p = params.add(name, rows, cols);
  fill_glorot(p.value, rng);
  return p;
}

void check_ids(std::span<const TokenId> ids, std::size_t vocab_size) {
  for (TokenId id : ids) {
    if (id >= vocab_size) throw DataError("token id " + std::to_string(id) + " outside vocabulary");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Feed-forward n-gram model

FFNNLM::FFNNLM(Vocabulary vocab, FFNNLMConfig config, std::uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
  if (config_.order < 2) throw ConfigError("feed-forward LM order must be at least 2");
  if (config_.embed == 0 || config_.hidden == 0) throw ConfigError("feed-forward LM sizes must be positive");
  std::mt19937_64 rng(seed);
  const std::size_t v = vocab_.size();
  embed_ = &add_embeddings(params_, "M", config_.embed, v, rng);
  w_mh_ = &add_glorot(params_, "W_mh", config_.hidden, config_.embed * (config_.order - 1), rng);
  b_h_ = &params_.add("b_h", config_.hidden, 1);
  w_hs_ = &add_glorot(params_, "W_hs", v, config_.hidden, rng);
  b_s_ = &params_.add("b_s", v, 1);
}

std::vector<TokenId> FFNNLM::context_at(std::span<const TokenId> sentence, std::size_t t) const {
  const std::size_t width = config_.order - 1;
  std::vector<TokenId> ctx(width, kBos);
  for (std::size_t k = 0; k < width; ++k) {
    // slot k holds the word (width - k) positions back
    const std::size_t back = width - k;
    if (back <= t) ctx[k] = sentence[t - back];
  }
  return ctx;
}

Expr FFNNLM::scores(ComputationGraph& cg, const std::vector<std::vector<TokenId>>& contexts) const {
  const std::size_t width = config_.order - 1;
  std::vector<Expr> slots;
  for (std::size_t k = 0; k < width; ++k) {
    std::vector<std::uint32_t> ids;
    ids.reserve(contexts.size());
    for (const auto& c : contexts) {
      if (c.size() != width) throw ShapeError("context of length " + std::to_string(c.size()) + ", expected " +
                                              std::to_string(width));
      ids.push_back(c[k]);
    }
    check_ids(ids, vocab_.size());
    slots.push_back(cg.lookup(*embed_, std::move(ids)));
  }
  const Expr m = concat_rows(slots);
  Expr pre = cg.parameter(*w_mh_) * m + cg.parameter(*b_h_);
  const Expr h = config_.nonlinearity == Nonlinearity::tanh ? tanh(pre) : relu(pre);
  return cg.parameter(*w_hs_) * h + cg.parameter(*b_s_);
}

Expr FFNNLM::loss(ComputationGraph& cg, std::span<const Sentence> sentences) const {
  std::vector<std::vector<TokenId>> contexts;
  std::vector<std::uint32_t> targets;
  for (const auto& s : sentences) {
    check_ids(s, vocab_.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      contexts.push_back(context_at(s, t));
      targets.push_back(s[t]);
    }
  }
  if (targets.empty()) return cg.input_scalar(0.0);
  return sum_elems(pick_neg_log_softmax(scores(cg, contexts), std::move(targets)));
}

Tensor FFNNLM::probabilities(std::span<const TokenId> history) const {
  ComputationGraph cg;
  const Expr s = scores(cg, {context_at(history, history.size())});
  return softmax(cg.forward(s));
}

std::vector<double> FFNNLM::token_log_probs(std::span<const TokenId> sentence) const {
  check_ids(sentence, vocab_.size());
  if (sentence.empty()) return {};
  std::vector<std::vector<TokenId>> contexts;
  for (std::size_t t = 0; t < sentence.size(); ++t) contexts.push_back(context_at(sentence, t));
  ComputationGraph cg;
  const Tensor logp = log_softmax(cg.forward(scores(cg, contexts)));
  std::vector<double> out;
  for (std::size_t t = 0; t < sentence.size(); ++t) out.push_back(logp(sentence[t], t));
  return out;
}

HeldOutScore FFNNLM::score_corpus(std::span<const Sentence> corpus) const {
  HeldOutScore s;
  for (const auto& sent : corpus) {
    for (double lp : token_log_probs(sent)) s.log_likelihood += lp;
    s.words += sent.size();
  }
  return s;
}

// ---------------------------------------------------------------------------
// Recurrent model

namespace {

StackedRNN make_stack(ParameterCollection& params, const RnnLMConfig& c, std::uint64_t seed) {
  if (c.embed == 0 || c.hidden == 0) throw ConfigError("recurrent LM sizes must be positive");
  std::mt19937_64 rng(seed);
  return StackedRNN(params, "rnn", c.cell, c.layers, c.embed, c.hidden, c.residual, rng);
}

}  // namespace

RnnLM::RnnLM(Vocabulary vocab, RnnLMConfig config, std::uint64_t seed)
    : vocab_(std::move(vocab)), config_(config), rnn_(make_stack(params_, config_, seed + 1)) {
  std::mt19937_64 rng(seed);
  embed_ = &add_embeddings(params_, "E", config_.embed, vocab_.size(), rng);
  w_hs_ = &add_glorot(params_, "W_hs", vocab_.size(), config_.hidden, rng);
  b_s_ = &params_.add("b_s", vocab_.size(), 1);
}

Expr RnnLM::output_scores(ComputationGraph& cg, Expr h) const {
  return cg.parameter(*w_hs_) * h + cg.parameter(*b_s_);
}

Expr RnnLM::batch_loss(ComputationGraph& cg, const MiniBatch& batch) const {
  check_ids(batch.tokens, vocab_.size());
  const std::size_t b = batch.batch_size;
  auto state = rnn_.initial_state(cg, b);
  std::vector<Expr> terms;
  std::vector<std::uint32_t> prev(b, kBos);
  for (std::size_t t = 0; t < batch.max_len; ++t) {
    Expr out;
    state = rnn_.step(cg, cg.lookup(*embed_, prev), state, &out);
    std::vector<std::uint32_t> targets(b);
    Tensor mask(1, b);
    for (std::size_t j = 0; j < b; ++j) {
      targets[j] = batch.token(t, j);
      mask[j] = batch.mask_at(t, j);
    }
    const Expr nll = pick_neg_log_softmax(output_scores(cg, out), targets);
    terms.push_back(cmult(nll, cg.input(std::move(mask))));
    prev = std::move(targets);
  }
  if (terms.empty()) return cg.input_scalar(0.0);
  return sum_elems(sum(terms));
}

Expr RnnLM::sentence_loss(ComputationGraph& cg, std::span<const TokenId> sentence) const {
  check_ids(sentence, vocab_.size());
  auto state = rnn_.initial_state(cg, 1);
  std::vector<Expr> terms;
  TokenId prev = kBos;
  for (TokenId tok : sentence) {
    Expr out;
    state = rnn_.step(cg, cg.lookup(*embed_, prev), state, &out);
    terms.push_back(pick_neg_log_softmax(output_scores(cg, out), tok));
    prev = tok;
  }
  if (terms.empty()) return cg.input_scalar(0.0);
  return sum(terms);
}

RnnLM::State RnnLM::initial_state() const {
  State s;
  for (std::size_t l = 0; l < rnn_.layers(); ++l) {
    StateValues v;
    v.h = Tensor(config_.hidden, 1);
    if (has_cell_state(config_.cell)) v.c = Tensor(config_.hidden, 1);
    s.push_back(std::move(v));
  }
  return s;
}

Tensor RnnLM::step(State& state, TokenId prev) const {
  if (prev >= vocab_.size()) throw DataError("token id " + std::to_string(prev) + " outside vocabulary");
  ComputationGraph cg;
  Expr out;
  const auto next = rnn_.step(cg, cg.lookup(*embed_, prev), rnn_.state_from(cg, state), &out);
  const Tensor logp = log_softmax(cg.forward(output_scores(cg, out)));
  state = StackedRNN::values_of(cg, next);
  return logp;
}

std::vector<double> RnnLM::token_log_probs(std::span<const TokenId> sentence) const {
  check_ids(sentence, vocab_.size());
  ComputationGraph cg;
  auto state = rnn_.initial_state(cg, 1);
  std::vector<Expr> scores;
  TokenId prev = kBos;
  for (TokenId tok : sentence) {
    Expr out;
    state = rnn_.step(cg, cg.lookup(*embed_, prev), state, &out);
    scores.push_back(output_scores(cg, out));
    prev = tok;
  }
  std::vector<double> lp;
  for (std::size_t t = 0; t < sentence.size(); ++t) lp.push_back(log_softmax(cg.forward(scores[t]))[sentence[t]]);
  return lp;
}

HeldOutScore RnnLM::score_corpus(std::span<const Sentence> corpus, std::size_t batch_size) const {
  HeldOutScore s;
  if (corpus.empty()) return s;
  for (const auto& batch : make_batches(corpus, batch_size, true)) {
    ComputationGraph cg;
    s.log_likelihood -= cg.forward(batch_loss(cg, batch))[0];
    s.words += std::accumulate(batch.lengths.begin(), batch.lengths.end(), std::size_t{0});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Training

TrainLog train_ffnnlm(FFNNLM& model, std::span<const Sentence> train, std::span<const Sentence> dev,
                      const TrainSchedule& schedule) {
  if (schedule.batch_size == 0) throw ConfigError("batch size must be positive");
  const std::size_t units = (train.size() + schedule.batch_size - 1) / schedule.batch_size;
  auto loss = [&](ComputationGraph& cg, std::size_t u) {
    const std::size_t begin = u * schedule.batch_size;
    const std::size_t n = std::min(schedule.batch_size, train.size() - begin);
    return model.loss(cg, train.subspan(begin, n));
  };
  std::function<HeldOutScore()> dev_score;
  if (!dev.empty()) dev_score = [&] { return model.score_corpus(dev); };
  return train_units(model.params(), units, loss, dev_score, schedule);
}

TrainLog train_rnnlm(RnnLM& model, std::span<const Sentence> train, std::span<const Sentence> dev,
                     const TrainSchedule& schedule) {
  const auto batches = make_batches(train, schedule.batch_size, true);
  auto loss = [&](ComputationGraph& cg, std::size_t u) { return model.batch_loss(cg, batches[u]); };
  std::function<HeldOutScore()> dev_score;
  if (!dev.empty()) dev_score = [&] { return model.score_corpus(dev); };
  return train_units(model.params(), batches.size(), loss, dev_score, schedule);
}

// ---------------------------------------------------------------------------
// Two-input MLP toy problem

std::vector<ToyExample> equality_toy_data() {
  return {{{1, 1}, 1}, {{-1, 1}, -1}, {{1, -1}, -1}, {{-1, -1}, 1}};
}

ToyMlpResult train_toy_mlp(std::span<const ToyExample> data, const ToyMlpOptions& options) {
  if (options.hidden < 2) throw ConfigError("toy MLP needs at least 2 hidden units");
  if (data.empty()) throw DataError("toy MLP needs training data");
  if (options.learning_rate < 0.0) throw ConfigError("learning rate must be non-negative");
  std::mt19937_64 rng(options.seed);
  ParameterCollection params;
  Parameter& w_xh = params.add("W_xh", options.hidden, 2);
  Parameter& b_h = params.add("b_h", options.hidden, 1);
  Parameter& w_hy = params.add("W_hy", 1, options.hidden);
  Parameter& b_y = params.add("b_y", 1, 1);
  if (options.random_init) {
    fill_glorot(w_xh.value, rng);
    fill_glorot(w_hy.value, rng);
  }
  auto predict = [&](ComputationGraph& cg, const ToyExample& ex) {
    const Expr x = cg.input(Tensor::column({ex.x[0], ex.x[1]}));
    const Expr h = tanh(cg.parameter(w_xh) * x + cg.parameter(b_h));
    return cg.parameter(w_hy) * h + cg.parameter(b_y);
  };

  std::optional<Optimizer> opt;
  if (options.learning_rate > 0.0) opt.emplace(OptimizerConfig{OptimizerKind::sgd, options.learning_rate});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  ToyMlpResult result;
  for (unsigned epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> losses(data.size());
    for (std::size_t i : order) {
      ComputationGraph cg;
      const Expr loss = squared_distance(predict(cg, data[i]), cg.input_scalar(data[i].y));
      const double value = cg.forward(loss)[0];
      if (!std::isfinite(value)) throw DivergenceError("toy MLP loss diverged at epoch " + std::to_string(epoch));
      losses[i] = value;
      if (!opt) continue;
      cg.backward(loss);
      if (options.clip_norm > 0.0) clip_gradients(params, options.clip_norm);
      opt->step(params);
    }
    result.epoch_losses.push_back(std::accumulate(losses.begin(), losses.end(), 0.0));
  }
  result.all_correct = true;
  for (const auto& ex : data) {
    ComputationGraph cg;
    const double y = cg.forward(predict(cg, ex))[0];
    result.predictions.push_back(y);
    if ((y > 0) != (ex.y > 0)) result.all_correct = false;
  }
  return result;
}

}  // namespace s2sw
