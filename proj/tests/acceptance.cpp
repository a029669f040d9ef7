// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// quantity and the wall time. `--expect-fail N` (repeatable) lists criteria
// known to fail; the exit status is 0 iff the failures are exactly those.
// `--only N` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "ngram_oracle.hpp"
#include "op_suite.hpp"
#include "s2sw/eval.hpp"
#include "s2sw/loglinear.hpp"
#include "s2sw/model_file.hpp"
#include "s2sw/neural_lm.hpp"
#include "s2sw/ngram.hpp"
#include "s2sw/recurrent.hpp"
#include "s2sw/search.hpp"
#include "s2sw/seq2seq.hpp"
#include "toy_models.hpp"

using namespace s2sw;
using namespace s2sw::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0: none
  std::function<void(Verdict&)> run;
};

std::vector<Parameter*> all_params(ParameterCollection& params) {
  std::vector<Parameter*> out;
  for (auto& p : params) out.push_back(p.get());
  return out;
}

Vocabulary numbered_vocab(std::size_t words, const std::string& prefix = "w") {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < words; ++i) tokens.push_back(prefix + std::to_string(i));
  return Vocabulary::from_tokens(tokens);
}

std::vector<Sentence> random_sentences(std::mt19937_64& rng, std::size_t n, std::size_t vocab_size,
                                       std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<TokenId> tok(kUnk + 1, static_cast<TokenId>(vocab_size - 1));
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::vector<Sentence> out(n);
  for (auto& s : out) {
    for (std::size_t l = len(rng); l > 0; --l) s.push_back(tok(rng));
    s.push_back(kEos);
  }
  return out;
}

// ---------------------------------------------------------------- n-grams

void ngram_normalization(Verdict& v) {
  std::mt19937_64 rng(1001);
  const Vocabulary vocab = numbered_vocab(15);
  const auto corpus = random_sentences(rng, 100, vocab.size(), 0, 10);
  std::uniform_int_distribution<TokenId> any(0, static_cast<TokenId>(vocab.size() - 1));
  std::uniform_real_distribution<double> alpha(0.01, 0.99);
  std::uniform_int_distribution<unsigned> order(1, 4);
  const double v_all = static_cast<double>(vocab.v_all());
  const double unseen_share = (v_all - static_cast<double>(vocab.size() - 1)) / v_all;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const unsigned n = order(rng);
    std::vector<double> a(n);
    for (double& x : a) x = alpha(rng);
    const NGramModel m = NGramModel::train(vocab, corpus, n, InterpolationWeights{a});
    std::vector<TokenId> ctx(n - 1, kBos);
    if (trial % 2 == 0 && n > 1) {
      // a context observed in training
      const Sentence& s = corpus[rng() % corpus.size()];
      const std::size_t t = rng() % s.size();
      for (std::size_t k = 0; k < n - 1; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t) - 1 - static_cast<std::ptrdiff_t>(k);
        ctx[n - 2 - k] = pos < 0 ? kBos : s[static_cast<std::size_t>(pos)];
      }
    } else {
      for (auto& c : ctx) c = any(rng);
    }
    double total = m.unknown_weight(ctx) * unseen_share;
    for (TokenId e = 0; e < vocab.size(); ++e) {
      if (e != kUnk) total += m.prob(ctx, e);
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  v.detail << "max |mass - 1| = " << worst << " over 1000 contexts";
  v.require(worst < 1e-9, "normalization within 1e-9");
}

void ngram_oracle(Verdict& v) {
  // corpus "a b", "a a" plus a richer one for the 10 hand-built sentences
  const std::vector<std::string> lines{"the cat sat", "the dog sat", "a cat ran", "the cat ran fast", "dogs sat"};
  const Vocabulary vocab = build_vocab(lines, VocabPolicy::keep_all());
  const auto corpus = encode_all(vocab, lines, true);
  const std::vector<std::string> sentences{"the cat sat",      "the dog ran",  "a dog sat fast", "cat the",
                                           "fast fast fast",   "the bird sat", "",               "dogs ran the cat",
                                           "a a a a a",        "sat"};
  double worst = 0.0;
  for (unsigned n = 1; n <= 4; ++n) {
    std::vector<double> alpha;
    for (unsigned m = 1; m <= n; ++m) alpha.push_back(0.15 * m);
    const NGramModel model = NGramModel::train(vocab, corpus, n, InterpolationWeights{alpha});
    const NGramOracle oracle(corpus, n, alpha, vocab.v_all());
    for (const auto& line : sentences) {
      const Sentence s = encode(vocab, line, true);
      worst = std::max(worst, std::abs(model.sentence_log_prob(s) - oracle.sentence_log_prob(s)));
    }
  }
  v.detail << "max |log p - oracle| = " << worst << " (10 sentences, orders 1-4); ";
  v.require(worst < 1e-12, "oracle agreement within 1e-12");

  const std::vector<std::string> two{"a b", "a a"};
  const Vocabulary tv = build_vocab(two, VocabPolicy::keep_all());
  const auto tc = encode_all(tv, two, true);
  const NGramModel bigram = NGramModel::train(tv, tc, 2, InterpolationWeights::uniform(2, 0.5));
  const NGramOracle bigram_oracle(tc, 2, {0.5, 0.5}, tv.v_all());
  const std::vector<TokenId> ctx{tv.id("a")};
  const double p = bigram.prob(ctx, tv.id("b"));
  const double oracle_p = bigram_oracle.prob(2, ctx, tv.id("b"));
  const double stated = 0.2023809 + 2.5e-8;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "P(b|a) = %.10f (oracle %.10f, 6 counted unigram tokens: 0.5/3 + 0.25/6 + 0.25e-7); stated %.10f",
                p, oracle_p, stated);
  v.detail << buf;
  v.require(std::abs(p - oracle_p) < 1e-15, "model and oracle agree on P(b|a)");
  // the stated value rounds to 7 decimals
  v.require(std::abs(p - stated) < 5e-8, "P(b|a) matches the stated value");
}

// ---------------------------------------------------------------- gradients

double naive_loglinear_loss(const LogLinearParams& p, const FeatureVector& x, TokenId target) {
  const std::size_t rows = p.bias.rows();
  std::vector<double> s(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    s[r] = p.bias[r];
    for (const auto& [j, xj] : x.active) s[r] += p.weights(r, j) * xj;
  }
  double z = 0.0;
  for (double si : s) z += std::exp(si);
  return std::log(z) - s[target];
}

double loglinear_gradient_error() {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> vdist(2, 8), ndist(1, 12);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::bernoulli_distribution on(0.4);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = vdist(rng), n = ndist(rng);
    LogLinearParams p(rows, n);
    fill_uniform(p.weights, -1.0, 1.0, rng);
    fill_uniform(p.bias, -1.0, 1.0, rng);
    FeatureVector x;
    x.dimension = n;
    for (std::size_t j = 0; j < n; ++j)
      if (on(rng)) x.active.emplace_back(j, val(rng));
    const TokenId target = static_cast<TokenId>(rng() % rows);
    const LossGrad g = loss_and_grad(p, x, target);
    Tensor grad_w(rows, n);
    for (const auto& [j, col] : g.grad_cols)
      for (std::size_t r = 0; r < rows; ++r) grad_w(r, j) = col[r];
    auto numeric = [&](double& slot) {
      const double keep = slot;
      slot = keep + h;
      const double up = naive_loglinear_loss(p, x, target);
      slot = keep - h;
      const double down = naive_loglinear_loss(p, x, target);
      slot = keep;
      return (up - down) / (2 * h);
    };
    for (std::size_t r = 0; r < rows; ++r) {
      worst = std::max(worst, relative_error(g.grad_bias[r], numeric(p.bias[r])));
      for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, relative_error(grad_w(r, j), numeric(p.weights(r, j))));
    }
  }
  return worst;
}

double op_gradient_error(std::string& worst_op) {
  double worst = 0.0;
  std::uint64_t seed = 100;
  for (const auto& [name, build] : differentiable_ops()) {
    const double err = worst_input_error(build, 30, seed++);
    if (err >= worst) {
      worst = err;
      worst_op = name;
    }
  }
  // parameter and lookup nodes
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    ParameterCollection pc;
    auto& emb = pc.add("E", 3, 5);
    auto& w = pc.add("W", 4, 3);
    fill_uniform(emb.value, -1, 1, rng);
    fill_uniform(w.value, -1, 1, rng);
    const auto id1 = static_cast<std::uint32_t>(rng() % 5), id2 = static_cast<std::uint32_t>(rng() % 5);
    auto build = [&](ComputationGraph& cg) {
      Expr h = tanh(cg.parameter(w) * cg.lookup(emb, {id1, id2, id1}));
      return sum_elems(pick_neg_log_softmax(h, std::vector<std::uint32_t>{0, 3, 1}));
    };
    const double err = check_parameters(build, {&emb, &w}).max_relative_error;
    if (err >= worst) {
      worst = err;
      worst_op = "parameter/lookup";
    }
  }
  return worst;
}

double cell_gradient_error() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(1, 5);
  double worst = 0.0;
  for (CellKind kind : {CellKind::rnn, CellKind::lstm, CellKind::lstm_forget, CellKind::gru}) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t in = size(rng), hid = size(rng);
      ParameterCollection params;
      RecurrentCell cell(params, "c", kind, in, hid, rng);
      for (auto& p : params) fill_uniform(p->value, -1.0, 1.0, rng);
      std::vector<Tensor> xs(3, Tensor(in, 1));
      for (auto& x : xs) fill_uniform(x, -1.0, 1.0, rng);
      Tensor target(hid, 1);
      fill_uniform(target, -1.0, 1.0, rng);
      auto build = [&](ComputationGraph& cg) {
        auto s = cell.initial_state(cg);
        for (const auto& x : xs) s = cell.step(cg, cg.input(x), s);
        Expr loss = squared_distance(s.h, cg.input(target));
        return s.has_cell ? loss + squared_distance(s.c, cg.input(target)) : loss;
      };
      worst = std::max(worst, check_parameters(build, all_params(params)).max_relative_error);
    }
  }
  return worst;
}

double encdec_gradient_error() {
  const Vocabulary vocab = numbered_vocab(3, "s");
  const std::vector<TokenId> f{3, 4, 5}, e{5, 3, kEos};
  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (AttentionKind attn : {AttentionKind::dot, AttentionKind::bilinear, AttentionKind::mlp}) {
    for (CellKind cell : {CellKind::lstm_forget, CellKind::gru}) {
      EncDecConfig c;
      c.cell = cell;
      c.embed = 3;
      c.enc_hidden = 3;
      c.dec_hidden = 6;  // equals the bidirectional encoding size, as dot scores need
      c.attention = attn;
      c.attention_hidden = 4;
      EncDecModel m(vocab, vocab, c, rng());
      for (auto& p : m.params()) fill_uniform(p->value, -0.8, 0.8, rng);
      const auto r =
          check_parameters([&](ComputationGraph& cg) { return m.sentence_loss(cg, f, e); }, all_params(m.params()));
      worst = std::max(worst, r.max_relative_error);
    }
  }
  return worst;
}

void gradient_suites(Verdict& v) {
  const double ll = loglinear_gradient_error();
  std::string worst_op;
  const double ops = op_gradient_error(worst_op);
  const double cells = cell_gradient_error();
  const double e2e = encdec_gradient_error();
  v.detail << "log-linear " << ll << ", ops " << ops << " (worst " << worst_op << "), cells " << cells
           << ", encdec " << e2e;
  v.require(ll < 1e-6, "log-linear < 1e-6");
  v.require(ops < 1e-6, "autodiff ops < 1e-6");
  v.require(cells < 1e-6, "recurrent cells < 1e-6");
  v.require(e2e < 1e-5, "end-to-end < 1e-5");
}

void memory_path(Verdict& v) {
  constexpr int kSteps = 20;
  std::mt19937_64 rng(5);
  std::vector<Tensor> inputs(kSteps, Tensor(3, 1));
  for (auto& x : inputs) fill_uniform(x, -1, 1, rng);

  ParameterCollection lstm_params;
  RecurrentCell lstm(lstm_params, "l", CellKind::lstm, 3, 1, rng);
  lstm.param("b_i").value.fill(-100.0);
  ComputationGraph a;
  const Expr c0 = a.input(Tensor::column({0.3}));
  RecurrentState s{a.input(Tensor::column({0.0})), c0, true};
  for (const auto& x : inputs) s = lstm.step(a, a.input(x), s);
  Expr lstm_loss = sum_elems(s.c);
  a.forward(lstm_loss);
  a.backward(lstm_loss);
  const double dc = a.gradient(c0)[0];

  ParameterCollection rnn_params;
  RecurrentCell rnn(rnn_params, "r", CellKind::rnn, 3, 1, rng);
  ComputationGraph b;
  const Expr h0 = b.input(Tensor::column({0.3}));
  RecurrentState r{h0, {}, false};
  for (const auto& x : inputs) r = rnn.step(b, b.input(x), r);
  Expr rnn_loss = sum_elems(r.h);
  b.forward(rnn_loss);
  b.backward(rnn_loss);
  const double dh = b.gradient(h0)[0];

  v.detail << "lstm dc_T/dc_0 = " << dc << ", rnn dh_T/dh_0 = " << dh << " at T = " << kSteps;
  v.require(std::abs(dc - 1.0) < 1e-6, "|dc_T/dc_0 - 1| < 1e-6");
  v.require(std::abs(dh) < 1e-3, "|dh_T/dh_0| < 1e-3");
}

void toy_mlp(Verdict& v) {
  const auto data = equality_toy_data();
  ToyMlpOptions opts;
  opts.epochs = 1000;
  const ToyMlpResult r = train_toy_mlp(data, opts);
  int correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += (r.predictions[i] > 0) == (data[i].y > 0);
  v.detail << correct << "/" << data.size() << " sign-correct after " << opts.epochs << " epochs, final loss "
           << r.epoch_losses.back();
  v.require(data.size() == 4, "four data points");
  v.require(correct == 4, "4/4 correct");
}

// ---------------------------------------------------------------- search

void search_oracles(Verdict& v) {
  int b1_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const PrefixModel m = random_model(seed, 4 + seed % 3, 0.05);
    const Hypothesis g = greedy(m, {}, 7);
    const auto b = beam_search(m, {}, BeamOptions{.beam = 1, .max_len = 7});
    if (b.size() != 1 || b[0].tokens != g.tokens || b[0].log_prob != g.log_prob) ++b1_mismatch;
  }
  int exhaustive_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PrefixModel m = random_model(seed, 3);
    const auto all = enumerate_finished(m, 4);
    const Scored* best = &all[0];
    for (const Scored& s : all) {
      if (s.log_prob > best->log_prob ||
          (s.log_prob == best->log_prob && std::lexicographical_compare(s.tokens.begin(), s.tokens.end(),
                                                                        best->tokens.begin(), best->tokens.end()))) {
        best = &s;
      }
    }
    const auto nbest = beam_search(m, {}, BeamOptions{.beam = 81, .max_len = 4});
    if (nbest.empty() || nbest[0].tokens != best->tokens || std::abs(nbest[0].log_prob - best->log_prob) > 1e-12) {
      ++exhaustive_mismatch;
    }
  }
  const PrefixModel t = toy_t();
  const Hypothesis g = greedy(t, {}, 10);
  const auto b2 = beam_search(t, {}, BeamOptions{.beam = 2, .max_len = 10});
  const bool greedy_ok = g.tokens == std::vector<TokenId>{kA, kEos} && std::abs(std::exp(g.log_prob) - 0.25) < 1e-12;
  const bool beam_ok =
      !b2.empty() && b2[0].tokens == std::vector<TokenId>{kB, kEos} && std::abs(std::exp(b2[0].log_prob) - 0.45) < 1e-12;
  v.detail << "b=1 vs greedy mismatches " << b1_mismatch << "/200, exhaustive vs brute force mismatches "
           << exhaustive_mismatch << "/100, toy: greedy p=" << std::exp(g.log_prob)
           << " beam2 p=" << (b2.empty() ? 0.0 : std::exp(b2[0].log_prob));
  v.require(b1_mismatch == 0, "beam 1 equals greedy");
  v.require(exhaustive_mismatch == 0, "exhaustive beam equals brute force");
  v.require(greedy_ok, "greedy returns a EOS at 0.25");
  v.require(beam_ok, "beam 2 returns b EOS at 0.45");
}

void sampling_fidelity(Verdict& v) {
  const std::vector<double> p{0.0, 0.1, 0.0, 0.55, 0.35};
  const PrefixModel m(5, [&](std::span<const TokenId>) { return log_column(p); });
  const int n = 100000;
  std::vector<double> freq(5, 0.0);
  for (int i = 0; i < n; ++i) freq[sample(m, {}, static_cast<std::uint64_t>(i), 1).tokens[0]] += 1.0 / n;
  double tv = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) tv += 0.5 * std::abs(freq[k] - p[k]);
  v.detail << "total variation " << tv << " over " << n << " samples";
  v.require(tv < 0.01, "TV < 0.01");
}

void masking(Verdict& v) {
  const Vocabulary vocab = numbered_vocab(6);
  std::mt19937_64 rng(12);
  double worst = 0.0;
  int batches = 0;
  for (CellKind kind : {CellKind::rnn, CellKind::lstm, CellKind::lstm_forget, CellKind::gru}) {
    RnnLM lm(vocab, {kind, 2, 5, 5, true}, 21 + static_cast<int>(kind));
    for (int trial = 0; trial < 25; ++trial) {
      const auto sents = random_sentences(rng, 2 + rng() % 6, vocab.size(), 0, 12);
      const MiniBatch batch = make_batches(sents, sents.size(), trial % 2 == 0).front();
      double separate = 0.0;
      for (const auto& s : sents) {
        ComputationGraph cg;
        separate += cg.forward(lm.sentence_loss(cg, s))[0];
      }
      ComputationGraph cg;
      const double batched = cg.forward(lm.batch_loss(cg, batch))[0];
      worst = std::max(worst, std::abs(batched - separate));
      ++batches;
    }
  }
  v.detail << "max |batched - summed| = " << worst << " over " << batches << " batches";
  v.require(batches == 100, "100 batches");
  v.require(worst < 1e-8, "within 1e-8");
}

// ---------------------------------------------------------------- copy task

struct CopyTask {
  Vocabulary vocab;
  std::vector<SentencePair> train, held_out;
};

CopyTask make_copy_task() {
  std::vector<std::string> symbols;
  for (int i = 0; i < 9; ++i) symbols.push_back(std::string(1, static_cast<char>('a' + i)));
  CopyTask t{Vocabulary::from_tokens(symbols), {}, {}};  // 3 reserved + 9 = 12
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<TokenId> tok(kUnk + 1, 11);
  std::uniform_int_distribution<int> len(1, 8);
  auto make = [&](std::size_t n) {
    std::vector<SentencePair> out;
    for (std::size_t i = 0; i < n; ++i) {
      SentencePair p;
      for (int k = len(rng); k > 0; --k) p.source.push_back(tok(rng));
      p.target = p.source;
      p.target.push_back(kEos);
      out.push_back(std::move(p));
    }
    return out;
  };
  t.train = make(2000);
  t.held_out = make(200);
  return t;
}

EncDecModel train_copy_model(const CopyTask& task, std::uint64_t seed) {
  EncDecConfig c;
  c.embed = 16;
  c.enc_hidden = 32;
  c.dec_hidden = 32;
  c.attention_hidden = 32;
  EncDecModel m(task.vocab, task.vocab, c, seed);
  TrainSchedule s;
  s.epochs = 8;
  s.batch_size = 16;
  s.optimizer = OptimizerConfig::adam(0.005);
  s.seed = seed;
  train_encdec(m, task.train, task.held_out, s);
  return m;
}

struct CopyModels {
  CopyTask task = make_copy_task();
  std::vector<EncDecModel> models;
};

CopyModels& copy_models(std::size_t count) {
  static CopyModels cache;
  while (cache.models.size() < count) cache.models.push_back(train_copy_model(cache.task, 7 + cache.models.size()));
  return cache;
}

std::vector<std::string> words_of(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::vector<std::string> out;
  for (TokenId t : ids)
    if (t != kEos) out.push_back(vocab.token(t));
  return out;
}

void copy_task(Verdict& v) {
  const CopyModels& c = copy_models(1);
  const EncDecStepModel step(c.models[0]);
  std::size_t correct = 0, total = 0;
  std::vector<std::vector<std::string>> refs, greedy_out, beam_out;
  for (const auto& p : c.task.held_out) {
    const Hypothesis g = greedy(step, p.source, 0);
    for (std::size_t i = 0; i < p.target.size(); ++i) {
      ++total;
      correct += i < g.tokens.size() && g.tokens[i] == p.target[i];
    }
    const auto b = beam_search(step, p.source, BeamOptions{.beam = 4});
    refs.push_back(words_of(c.task.vocab, p.target));
    greedy_out.push_back(words_of(c.task.vocab, g.tokens));
    beam_out.push_back(words_of(c.task.vocab, b.front().tokens));
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(total);
  const double greedy_bleu = bleu(greedy_out, refs).bleu;
  const double beam_bleu = bleu(beam_out, refs).bleu;
  v.detail << "held-out token accuracy " << accuracy << " (" << correct << "/" << total << "), BLEU greedy "
           << greedy_bleu << " beam4 " << beam_bleu;
  v.require(accuracy > 0.99, "accuracy > 99%");
  v.require(beam_bleu >= greedy_bleu, "beam-4 BLEU >= greedy BLEU");
}

double held_out_log_likelihood(const StepModel& model, std::span<const SentencePair> pairs) {
  double total = 0.0;
  for (const auto& p : pairs) total += replay_log_prob(model, p.source, p.target);
  return total;
}

void ensembling(Verdict& v) {
  const CopyModels& c = copy_models(2);
  const EncDecStepModel a(c.models[0]), b(c.models[1]);

  // N identical members
  const EnsembleModel triple({&a, &a, &a});
  double worst = 0.0;
  for (const auto& p : std::span(c.task.held_out).first(50)) {
    StateHandle sa = a.start(p.source), se = triple.start(p.source);
    TokenId prev = kBos;
    for (TokenId t : p.target) {
      const StepResult ra = a.step(sa, prev), re = triple.step(se, prev);
      for (std::size_t k = 0; k < ra.log_probs.size(); ++k) {
        worst = std::max(worst, std::abs(std::exp(ra.log_probs[k]) - std::exp(re.log_probs[k])));
      }
      sa = ra.state;
      se = re.state;
      prev = t;
    }
  }
  const EnsembleModel pair({&a, &b});
  const double ll_a = held_out_log_likelihood(a, c.task.held_out);
  const double ll_b = held_out_log_likelihood(b, c.task.held_out);
  const double ll_pair = held_out_log_likelihood(pair, c.task.held_out);
  v.detail << "3 identical members: max |p - p_single| = " << worst << "; held-out LL members " << ll_a << ", "
           << ll_b << ", ensemble " << ll_pair;
  v.require(worst < 1e-12, "identical ensemble equals single model");
  v.require(ll_pair >= std::min(ll_a, ll_b), "ensemble LL >= min member LL");
}

// ---------------------------------------------------------------- persistence

template <typename Model, typename Score>
bool round_trip(const Model& model, const Score& score, const std::string& name, std::ostringstream& log) {
  std::ostringstream bytes(std::ios::binary);
  write_model_file(bytes, to_model_file(model));
  std::istringstream in(bytes.str(), std::ios::binary);
  const AnyModel loaded = from_model_file(read_model_file(in, name));
  const Model& back = std::get<Model>(loaded);
  std::ostringstream again(std::ios::binary);
  write_model_file(again, to_model_file(back));
  const EvalReport x = score(model), y = score(back);
  const bool same = again.str() == bytes.str() && x.total_log_likelihood == y.total_log_likelihood &&
                    x.perplexity == y.perplexity && x.word_count == y.word_count &&
                    x.unk_log_portion == y.unk_log_portion;
  log << name << (same ? " ok " : " DIFFERS ");
  return same;
}

void persistence(Verdict& v) {
  std::mt19937_64 rng(77);
  const Vocabulary vocab = numbered_vocab(6);
  const auto train = random_sentences(rng, 30, vocab.size(), 0, 6);
  auto test = random_sentences(rng, 10, vocab.size(), 0, 6);
  test[0].insert(test[0].begin(), kUnk);
  auto randomize = [&](ParameterCollection& params) {
    for (auto& p : params) fill_uniform(p->value, -0.7, 0.7, rng);
  };
  auto lm_score = [&](const auto& m) { return evaluate(m, test); };
  bool ok = true;

  ok &= round_trip(NGramModel::train(vocab, train, 3, InterpolationWeights{{0.1, 0.2, 0.3}}), lm_score, "ngram",
                   v.detail);
  LogLinearLM ll(vocab, "prev2_words,suffix_1");
  fill_uniform(ll.params().weights, -1, 1, rng);
  fill_uniform(ll.params().bias, -1, 1, rng);
  ok &= round_trip(ll, lm_score, "loglinear", v.detail);
  FFNNLM ff(vocab, FFNNLMConfig{.order = 3, .embed = 3, .hidden = 4}, 1);
  randomize(ff.params());
  ok &= round_trip(ff, lm_score, "ffnnlm", v.detail);
  for (CellKind cell : {CellKind::rnn, CellKind::lstm, CellKind::lstm_forget, CellKind::gru}) {
    RnnLM rnn(vocab, RnnLMConfig{.cell = cell, .layers = 2, .embed = 4, .hidden = 4, .residual = true}, 2);
    randomize(rnn.params());
    ok &= round_trip(rnn, lm_score, "rnnlm/" + to_string(cell), v.detail);
  }
  std::vector<SentencePair> pairs;
  for (std::size_t i = 0; i + 1 < test.size(); ++i) {
    Sentence src(test[i].begin(), test[i].end() - 1);
    if (src.empty()) src.push_back(3);
    pairs.push_back({src, test[i + 1]});
  }
  auto pair_score = [&](const EncDecModel& m) { return evaluate(m, pairs); };
  for (AttentionKind attn : {AttentionKind::none, AttentionKind::dot, AttentionKind::bilinear, AttentionKind::mlp}) {
    EncDecConfig c{.embed = 3, .enc_hidden = 3, .dec_hidden = 6, .attention = attn, .attention_hidden = 2};
    EncDecModel ed(vocab, vocab, c, 3);
    randomize(ed.params());
    ok &= round_trip(ed, pair_score, "encdec/" + to_string(attn), v.detail);
  }
  v.require(ok, "save -> load -> eval bit-identical for every kind");
}

// ---------------------------------------------------------------- bleu

void bleu_cases(Verdict& v) {
  const std::vector<std::string> same{"the cat sat on the mat"};
  const BleuReport identical = bleu_lines(same, same);
  const std::vector<std::string> h2{"the cat sat on the mat"}, r2{"the cat is on the mat"};
  const BleuReport no4 = bleu_lines(h2, r2);
  const std::vector<std::string> h3{"the cat is on"}, r3{"the cat is on the mat"};
  const BleuReport brevity = bleu_lines(h3, r3);
  v.detail << "identical " << identical.bleu << " (BP " << identical.brevity_penalty << "), p4=0 case " << no4.bleu
           << " (p = " << no4.precisions[0] << ", " << no4.precisions[1] << ", " << no4.precisions[2] << ", "
           << no4.precisions[3] << "), brevity case " << brevity.bleu;
  v.require(identical.bleu == 1.0 && identical.brevity_penalty == 1.0, "identical pair -> 1");
  v.require(no4.bleu == 0.0 && no4.precisions[3] == 0.0, "p4 = 0 -> 0");
  v.require(std::abs(brevity.bleu - 0.6065) < 1e-4, "brevity case 0.6065 +- 1e-4");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--expect-fail" || arg == "--only") && i + 1 < argc) {
      (arg == "--only" ? only : expected_failures).insert(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: " << argv[0] << " [--only N]... [--expect-fail N]...\n";
      return 1;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "n-gram normalization", 5, ngram_normalization},
      {2, "n-gram oracle equivalence", 0, ngram_oracle},
      {3, "gradient suites", 60, gradient_suites},
      {4, "LSTM memory path", 0, memory_path},
      {5, "toy MLP", 5, toy_mlp},
      {6, "search oracles", 10, search_oracles},
      {7, "sampling fidelity", 0, sampling_fidelity},
      {8, "masking exactness", 0, masking},
      {9, "copy task", 600, copy_task},
      {10, "BLEU", 0, bleu_cases},
      {11, "ensembling", 0, ensembling},
      {12, "persistence", 0, persistence},
  };

  std::set<int> failed;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      v.pass = false;
      v.detail << " [violated: runtime < " << c.time_limit_s << " s]";
    }
    if (!v.pass) failed.insert(c.id);
    std::printf("%s  %2d  %-26s %7.2fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                v.detail.str().c_str());
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expected_failures)
    if (only.empty() || only.count(id)) expected.insert(id);
  std::printf("%zu passed, %zu failed", (only.empty() ? criteria.size() : only.size()) - failed.size(),
              failed.size());
  if (!expected.empty()) std::printf(" (expected to fail: %zu)", expected.size());
  std::printf("\n");
  return failed == expected ? 0 : 1;
}
