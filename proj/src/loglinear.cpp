// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/loglinear.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "s2sw/error.hpp"

namespace s2sw {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Last k code points of a valid UTF-8 string (the whole string if shorter).
std::string utf8_suffix(const std::string& s, unsigned k) {
  std::size_t pos = s.size();
  unsigned taken = 0;
  while (pos > 0 && taken < k) {
    --pos;
    while (pos > 0 && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
    ++taken;
  }
  return s.substr(pos);
}

TokenId history_at(std::span<const TokenId> history, std::size_t back) {
  // back = 1 is the previous token; positions before the sentence are <s>.
  return back <= history.size() ? history[history.size() - back] : kBos;
}

}  // namespace

FeatureTemplate FeatureTemplate::parse(const std::string& name) {
  if (name == "prev_word") return {FeatureKind::prev_word, 0};
  if (name == "prev2_words") return {FeatureKind::prev2_words, 0};
  if (name == "bag_of_words") return {FeatureKind::bag_of_words, 0};
  constexpr std::string_view prefix = "suffix_";
  if (name.starts_with(prefix)) {
    unsigned k = 0;
    const char* first = name.data() + prefix.size();
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec == std::errc() && ptr == last && k > 0) return {FeatureKind::suffix, k};
  }
  throw ConfigError("unknown feature template '" + name + "'");
}

std::string FeatureTemplate::name() const {
  switch (kind) {
    case FeatureKind::prev_word: return "prev_word";
    case FeatureKind::prev2_words: return "prev2_words";
    case FeatureKind::bag_of_words: return "bag_of_words";
    case FeatureKind::suffix: return "suffix_" + std::to_string(suffix_length);
  }
  return "";
}

FeatureExtractor::FeatureExtractor(const Vocabulary& vocab, std::vector<FeatureTemplate> templates)
    : vocab_size_(vocab.size()), templates_(std::move(templates)) {
  if (templates_.empty()) throw ConfigError("at least one feature template is required");
  for (const auto& t : templates_) {
    offsets_.push_back(dimension_);
    suffix_ids_.emplace_back();
    switch (t.kind) {
      case FeatureKind::prev_word:
      case FeatureKind::bag_of_words:
        dimension_ += vocab_size_;
        break;
      case FeatureKind::prev2_words:
        dimension_ += 2 * vocab_size_;
        break;
      case FeatureKind::suffix: {
        std::unordered_map<std::string, std::size_t> registry;
        auto& ids = suffix_ids_.back();
        ids.resize(vocab_size_);
        for (TokenId id = 0; id < vocab_size_; ++id) {
          auto [it, fresh] = registry.emplace(utf8_suffix(vocab.token(id), t.suffix_length), registry.size());
          ids[id] = it->second;
        }
        dimension_ += registry.size();
        break;
      }
    }
  }
}

FeatureExtractor FeatureExtractor::from_descriptor(const Vocabulary& vocab, const std::string& descriptor) {
  std::vector<FeatureTemplate> templates;
  std::stringstream ss(descriptor);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    templates.push_back(FeatureTemplate::parse(part));
  }
  return FeatureExtractor(vocab, std::move(templates));
}

std::string FeatureExtractor::descriptor() const {
  std::string out;
  for (const auto& t : templates_) {
    if (!out.empty()) out += ',';
    out += t.name();
  }
  return out;
}

FeatureVector FeatureExtractor::featurize(std::span<const TokenId> history) const {
  for (TokenId id : history) {
    if (id >= vocab_size_) throw DataError("token id " + std::to_string(id) + " outside vocabulary");
  }
  FeatureVector x;
  x.dimension = dimension_;
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    const std::size_t off = offsets_[i];
    switch (templates_[i].kind) {
      case FeatureKind::prev_word:
        x.active.emplace_back(off + history_at(history, 1), 1.0);
        break;
      case FeatureKind::prev2_words:
        x.active.emplace_back(off + history_at(history, 1), 1.0);
        x.active.emplace_back(off + vocab_size_ + history_at(history, 2), 1.0);
        break;
      case FeatureKind::suffix:
        x.active.emplace_back(off + suffix_ids_[i][history_at(history, 1)], 1.0);
        break;
      case FeatureKind::bag_of_words: {
        std::vector<std::pair<std::size_t, double>> bag;
        for (TokenId id : history) {
          auto it = std::find_if(bag.begin(), bag.end(), [&](const auto& p) { return p.first == off + id; });
          if (it == bag.end()) {
            bag.emplace_back(off + id, 1.0);
          } else {
            it->second += 1.0;
          }
        }
        x.active.insert(x.active.end(), bag.begin(), bag.end());
        break;
      }
    }
  }
  return x;
}

FeatureVector featurize(std::span<const TokenId> history, const Vocabulary& vocab,
                        const std::string& template_name) {
  return FeatureExtractor(vocab, {FeatureTemplate::parse(template_name)}).featurize(history);
}

namespace {

void check_dimension(const LogLinearParams& params, const FeatureVector& x) {
  if (x.dimension != params.weights.cols()) {
    throw ShapeError("feature dimension " + std::to_string(x.dimension) + " does not match weight columns " +
                     std::to_string(params.weights.cols()));
  }
  if (params.bias.rows() != params.weights.rows() || params.bias.cols() != 1) {
    throw ShapeError("bias shape " + params.bias.shape_str() + " does not match weights " +
                     params.weights.shape_str());
  }
}

}  // namespace

Tensor score(const LogLinearParams& params, const FeatureVector& x) {
  check_dimension(params, x);
  Tensor s = params.bias;
  const std::size_t v = s.rows();
  for (const auto& [j, xj] : x.active) {
    if (j >= x.dimension) throw ShapeError("feature index " + std::to_string(j) + " out of range");
    for (std::size_t r = 0; r < v; ++r) s[r] += params.weights(r, j) * xj;
  }
  return s;
}

Tensor score_dense(const LogLinearParams& params, const FeatureVector& x) {
  check_dimension(params, x);
  Tensor dense(x.dimension, 1);
  for (const auto& [j, xj] : x.active) dense[j] += xj;
  Tensor s = matmul(params.weights, dense);
  s += params.bias;
  return s;
}

LossGrad loss_and_grad(const LogLinearParams& params, const FeatureVector& x, TokenId target) {
  const Tensor s = score(params, x);
  if (target >= s.rows()) throw DataError("target id " + std::to_string(target) + " outside vocabulary");
  const Tensor logp = log_softmax(s);
  LossGrad out;
  out.loss = -logp[target];
  if (!std::isfinite(out.loss)) throw DivergenceError("non-finite loss " + std::to_string(out.loss));
  out.grad_bias = Tensor(s.rows(), 1);
  for (std::size_t r = 0; r < s.rows(); ++r) out.grad_bias[r] = std::exp(logp[r]);
  out.grad_bias[target] -= 1.0;
  for (const auto& [j, xj] : x.active) {
    Tensor col = out.grad_bias;
    col *= xj;
    out.grad_cols.emplace_back(j, std::move(col));
  }
  return out;
}

LogLinearLM::LogLinearLM(Vocabulary vocab, const std::string& descriptor)
    : vocab_(std::move(vocab)), features_(FeatureExtractor::from_descriptor(vocab_, descriptor)),
      params_(vocab_.size(), features_.dimension()) {}

LogLinearLM::LogLinearLM(Vocabulary vocab, const std::string& descriptor, LogLinearParams params)
    : vocab_(std::move(vocab)), features_(FeatureExtractor::from_descriptor(vocab_, descriptor)),
      params_(std::move(params)) {
  if (params_.weights.rows() != vocab_.size() || params_.weights.cols() != features_.dimension() ||
      params_.bias.rows() != vocab_.size() || params_.bias.cols() != 1) {
    throw ShapeError("log-linear parameters " + params_.weights.shape_str() + "/" + params_.bias.shape_str() +
                     " do not match vocabulary " + std::to_string(vocab_.size()) + " and " +
                     std::to_string(features_.dimension()) + " features");
  }
}

Tensor LogLinearLM::probabilities(std::span<const TokenId> history) const {
  return softmax(score(params_, features_.featurize(history)));
}

std::vector<double> LogLinearLM::token_log_probs(std::span<const TokenId> sentence) const {
  std::vector<double> out;
  out.reserve(sentence.size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    const Tensor logp = log_softmax(score(params_, features_.featurize(sentence.first(t))));
    if (sentence[t] >= logp.rows()) throw DataError("token id outside vocabulary");
    out.push_back(logp[sentence[t]]);
  }
  return out;
}

double LogLinearLM::log_likelihood(std::span<const Sentence> corpus) const {
  double ll = 0.0;
  for (const auto& s : corpus) {
    for (double lp : token_log_probs(s)) ll += lp;
  }
  return ll;
}

TrainLog train_sgd(LogLinearLM& model, std::span<const Sentence> train, std::span<const Sentence> dev,
                   const TrainSchedule& schedule) {
  double lr = schedule.optimizer.learning_rate;
  if (lr < 0.0 || !std::isfinite(lr)) throw ConfigError("learning rate must be non-negative");

  struct Example {
    FeatureVector x;
    TokenId target;
  };
  std::vector<Example> examples;
  for (const auto& s : train) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      examples.push_back({model.features().featurize(std::span<const TokenId>(s).first(t)), s[t]});
    }
  }
  if (examples.empty()) throw DataError("empty training corpus");

  std::size_t dev_words = 0;
  for (const auto& s : dev) dev_words += s.size();

  std::mt19937_64 rng(schedule.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  auto& params = model.params();
  LogLinearParams best = params;
  DevMonitor monitor(schedule);
  TrainLog log;

  for (unsigned epoch = 1; epoch <= schedule.epochs; ++epoch) {
    if (schedule.shuffle) std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t i : order) {
      const auto& ex = examples[i];
      LossGrad g = loss_and_grad(params, ex.x, ex.target);
      stats.train_loss += g.loss;
      if (lr == 0.0) continue;
      const std::size_t v = params.bias.rows();
      for (std::size_t r = 0; r < v; ++r) params.bias[r] -= lr * g.grad_bias[r];
      for (const auto& [j, col] : g.grad_cols) {
        for (std::size_t r = 0; r < v; ++r) params.weights(r, j) -= lr * col[r];
      }
    }
    if (!std::isfinite(stats.train_loss)) {
      throw DivergenceError("training loss diverged at epoch " + std::to_string(epoch));
    }
    if (dev_words > 0) {
      stats.dev_ll = model.log_likelihood(dev);
      stats.dev_ppl = std::exp(-stats.dev_ll / static_cast<double>(dev_words));
    }
    log.epochs.push_back(stats);
    const auto verdict = monitor.observe(stats.dev_ll);
    if (verdict.improved) {
      best = params;
      log.best_epoch = epoch;
    }
    if (verdict.halve_lr) lr *= 0.5;
    if (verdict.stop) break;
  }
  if (schedule.keep_best && log.best_epoch > 0) params = std::move(best);
  return log;
}

}  // namespace s2sw
