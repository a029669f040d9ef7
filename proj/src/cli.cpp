// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "s2sw/error.hpp"
#include "s2sw/eval.hpp"
#include "s2sw/model_file.hpp"
#include "s2sw/search.hpp"

namespace s2sw::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct TrainOptions {
  std::string train, dev, metrics, model;
  unsigned epochs = 10;
  std::string optimizer = "sgd";
  double learning_rate = std::numeric_limits<double>::quiet_NaN();  // NaN: optimizer default
  std::size_t batch_size = 1;
  unsigned patience = 0;
  double clip = 5.0;
  bool no_decay = false;
  bool keep_last = false;
  std::string unk = "singletons";
  std::uint64_t min_count = 2;
  std::uint64_t v_all = kDefaultVocabAll;
};

struct DecodeOptions {
  std::string input, output;
  std::string search = "greedy";
  std::size_t beam_size = 5;
  std::string length_norm = "none";
  std::size_t nbest = 0;
  bool replace_unk = false;
  std::size_t max_len = 0;
};

void add_train_options(CLI::App* cmd, TrainOptions& o, bool neural) {
  cmd->add_option("--train", o.train, "Training corpus, one sentence per line")->required();
  cmd->add_option("--dev", o.dev, "Held-out corpus for per-epoch scoring");
  cmd->add_option("--model", o.model, "Output model file")->required();
  cmd->add_option("--metrics", o.metrics, "Per-epoch metrics file");
  cmd->add_option("--v-all", o.v_all, "Size of the assumed full vocabulary")->capture_default_str();
  if (!neural) return;
  cmd->add_option("--epochs", o.epochs)->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"sgd", "momentum", "adagrad", "adam"}))
      ->capture_default_str();
  cmd->add_option("--lr", o.learning_rate, "Learning rate (default 0.1, or 0.001 for adam)");
  cmd->add_option("--batch-size", o.batch_size)->capture_default_str();
  cmd->add_option("--patience", o.patience, "Stop after this many epochs without dev improvement (0: never)")
      ->capture_default_str();
  cmd->add_option("--clip", o.clip, "Gradient norm clip (<= 0 disables)")->capture_default_str();
  cmd->add_flag("--no-decay", o.no_decay, "Keep the learning rate fixed");
  cmd->add_flag("--keep-last", o.keep_last, "Keep the last epoch instead of the best dev epoch");
  cmd->add_option("--unk", o.unk, "Unknown-word policy")->check(CLI::IsMember({"keep_all", "singletons", "min_count"}))
      ->capture_default_str();
  cmd->add_option("--min-count", o.min_count, "Threshold for --unk min_count")->capture_default_str();
}

void add_decode_options(CLI::App* cmd, DecodeOptions& o) {
  cmd->add_option("--input", o.input, "Source sentences, one per line")->required();
  cmd->add_option("--output", o.output, "Output file (default: standard output)");
  cmd->add_option("--search", o.search)->check(CLI::IsMember({"greedy", "beam", "sample"}))->capture_default_str();
  cmd->add_option("--beam-size", o.beam_size)->capture_default_str();
  cmd->add_option("--length-norm", o.length_norm)->check(CLI::IsMember({"none", "prior", "perword"}))
      ->capture_default_str();
  cmd->add_option("--nbest", o.nbest, "Write this many hypotheses per sentence as 'index ||| tokens ||| score'");
  cmd->add_flag("--replace-unk", o.replace_unk, "Replace <unk> with the most attended source word");
  cmd->add_option("--max-len", o.max_len, "Output length limit (0: 2 * source length + 10)");
}

VocabPolicy vocab_policy(const TrainOptions& o) {
  if (o.unk == "keep_all") return VocabPolicy::keep_all();
  if (o.unk == "min_count") return VocabPolicy::at_least(o.min_count);
  return VocabPolicy::replace_singletons();
}

TrainSchedule make_schedule(const TrainOptions& o, std::uint64_t shuffle_seed) {
  TrainSchedule s;
  s.epochs = o.epochs;
  s.optimizer.kind = parse_optimizer_kind(o.optimizer);
  if (s.optimizer.kind == OptimizerKind::adam) s.optimizer = OptimizerConfig::adam();
  if (!std::isnan(o.learning_rate)) s.optimizer.learning_rate = o.learning_rate;
  if (s.optimizer.learning_rate < 0.0) throw ConfigError("--lr must be non-negative");
  if (o.batch_size == 0) throw ConfigError("--batch-size must be positive");
  s.batch_size = o.batch_size;
  s.patience = o.patience;
  s.clip_norm = o.clip;
  s.decay = !o.no_decay;
  s.keep_best = !o.keep_last;
  s.seed = shuffle_seed;
  return s;
}

// One generator per run; model initialization and shuffling draw their seeds from it.
struct RunSeeds {
  explicit RunSeeds(std::uint64_t seed) : rng(seed) {}
  std::uint64_t next() { return rng(); }
  std::mt19937_64 rng;
};

Hyperparameters run_record(const TrainSchedule& s, std::uint64_t seed) {
  Hyperparameters h = describe(s.optimizer);
  h["seed"] = std::to_string(seed);
  h["epochs"] = std::to_string(s.epochs);
  h["batch_size"] = std::to_string(s.batch_size);
  return h;
}

void finish_training(const TrainOptions& o, const TrainLog& log) {
  if (!o.metrics.empty()) write_metrics(o.metrics, log);
}

std::vector<Sentence> read_corpus(const std::string& path, const Vocabulary& vocab) {
  return encode_all(vocab, read_lines(path), true);
}

std::vector<SentencePair> read_pairs(const std::string& src_path, const std::string& tgt_path,
                                     const Vocabulary& src_vocab, const Vocabulary& tgt_vocab) {
  const auto src = read_lines(src_path);
  const auto tgt = read_lines(tgt_path);
  if (src.size() != tgt.size()) {
    throw DataError(src_path + " has " + std::to_string(src.size()) + " lines but " + tgt_path + " has " +
                    std::to_string(tgt.size()));
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    pairs.push_back({encode(src_vocab, src[i], false), encode(tgt_vocab, tgt[i], true)});
  }
  return pairs;
}

std::string encode_length_counts(const LengthPrior& prior) {
  std::string out;
  for (const auto& [key, c] : prior.joint_counts()) {
    if (!out.empty()) out += ',';
    out += std::to_string(key.first) + ':' + std::to_string(key.second) + ':' + std::to_string(c);
  }
  return out;
}

LengthPrior decode_length_counts(const std::string& text, LengthPrior::Mode mode) {
  LengthPrior prior(mode);
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t f = 0, e = 0, c = 0;
    char sep1 = 0, sep2 = 0;
    std::istringstream fields(item);
    if (!(fields >> f >> sep1 >> e >> sep2 >> c) || sep1 != ':' || sep2 != ':') {
      throw DataError("malformed length statistics '" + item + "'");
    }
    for (std::size_t k = 0; k < c; ++k) prior.observe(f, e);
  }
  return prior;
}

// Output stream that is either a file or the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw DataError("cannot write " + path);
    out_ = &file_;
  }
  std::ostream& stream() { return *out_; }
  void close(const std::string& path) {
    if (!file_.is_open()) return;
    file_.close();
    if (!file_) throw DataError("cannot write " + path);
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

struct LoadedModel {
  ModelFile file;
  AnyModel model;
};

LoadedModel load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  ModelFile file = read_model_file(in, path);
  try {
    AnyModel model = from_model_file(file);
    return {std::move(file), std::move(model)};
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::unique_ptr<StepModel> step_model(const AnyModel& m) {
  return std::visit(
      [](const auto& model) -> std::unique_ptr<StepModel> {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, NGramModel>) return std::make_unique<NGramStepModel>(model);
        else if constexpr (std::is_same_v<T, LogLinearLM>) return std::make_unique<LogLinearStepModel>(model);
        else if constexpr (std::is_same_v<T, FFNNLM>) return std::make_unique<FFNNStepModel>(model);
        else if constexpr (std::is_same_v<T, RnnLM>) return std::make_unique<RnnStepModel>(model);
        else return std::make_unique<EncDecStepModel>(model);
      },
      m);
}

const EncDecModel& require_encdec(const LoadedModel& m, const std::string& path) {
  if (!std::holds_alternative<EncDecModel>(m.model)) {
    throw ConfigError(path + " holds a model of kind " + to_string(m.file.kind) + "; translation needs kind encdec");
  }
  return std::get<EncDecModel>(m.model);
}

LengthPrior length_prior(const DecodeOptions& o, const ModelFile& file) {
  if (o.length_norm == "none") return LengthPrior(LengthPrior::Mode::none);
  if (o.length_norm == "perword") return LengthPrior(LengthPrior::Mode::per_word_normalize);
  const auto it = file.hyperparameters.find("length_counts");
  if (it == file.hyperparameters.end()) {
    throw ConfigError("--length-norm prior needs a model trained by train-encdec (no length statistics stored)");
  }
  return decode_length_counts(it->second, LengthPrior::Mode::multinomial_prior);
}

std::string surface(const Hypothesis& h, std::span<const std::string> source_words, const Vocabulary& tgt,
                    bool replace_unk) {
  if (!replace_unk) return decode(tgt, h.tokens);
  std::string out;
  for (const std::string& w : replace_unknowns(h, source_words, tgt)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

void translate_all(const StepModel& model, const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                   bool attentional, const LengthPrior& prior, const DecodeOptions& o, std::uint64_t seed,
                   std::ostream& default_out) {
  if (o.replace_unk && !attentional) throw ConfigError("--replace-unk needs a model with attention");
  if (o.search == "beam" && o.beam_size == 0) throw ConfigError("--beam-size must be positive");
  const auto lines = read_lines(o.input);
  Sink sink(o.output, default_out);
  std::ostream& out = sink.stream();
  RunSeeds seeds(seed);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto words = split_tokens(lines[i]);
    const Sentence source = encode(src_vocab, lines[i], false);
    std::vector<Hypothesis> hyps;
    if (o.search == "beam") {
      hyps = beam_search(model, source, BeamOptions{.beam = o.beam_size, .max_len = o.max_len, .length = prior});
    } else if (o.search == "sample") {
      hyps.push_back(sample(model, source, seeds.next(), o.max_len));
    } else {
      hyps.push_back(greedy(model, source, o.max_len));
    }
    if (o.nbest == 0) {
      out << (hyps.empty() ? std::string() : surface(hyps.front(), words, tgt_vocab, o.replace_unk)) << '\n';
      continue;
    }
    const auto old = out.precision(10);
    for (std::size_t k = 0; k < hyps.size() && k < o.nbest; ++k) {
      out << i << " ||| " << surface(hyps[k], words, tgt_vocab, o.replace_unk) << " ||| " << hyps[k].score << '\n';
    }
    out.precision(old);
  }
  sink.close(o.output);
}

}  // namespace

std::vector<std::string> expand_config_files(const std::vector<std::string>& args) {
  std::vector<std::string> kept, from_files;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file name");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key = value");
      from_files.push_back("--" + trim(t.substr(0, eq)) + "=" + trim(t.substr(eq + 1)));
    }
  }
  // after the program name and the subcommand
  const std::size_t at = std::min<std::size_t>(kept.size(), 2);
  kept.insert(kept.begin() + static_cast<std::ptrdiff_t>(at), from_files.begin(), from_files.end());
  return kept;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"s2sw: n-gram, log-linear, neural and encoder-decoder language models"};
  app.name("s2sw");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough(false);

  std::uint64_t seed = 42;
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed, "Random seed")->capture_default_str(); };
  auto add_config = [](CLI::App* cmd) {
    cmd->add_option("--config", "key = value file; command-line flags take precedence");
  };

  // train-ngram
  TrainOptions ngram_opts;
  unsigned ngram_order = 3;
  std::vector<double> alpha{0.1};
  auto* train_ngram = app.add_subcommand("train-ngram", "Count an interpolated n-gram model");
  add_train_options(train_ngram, ngram_opts, false);
  train_ngram->add_option("--order", ngram_order)->capture_default_str();
  train_ngram->add_option("--alpha", alpha, "Held-out weight per order, comma separated (one value: all orders)")
      ->delimiter(',');
  add_config(train_ngram);

  // train-loglinear
  TrainOptions ll_opts;
  std::string features = "prev2_words";
  auto* train_ll = app.add_subcommand("train-loglinear", "Train a log-linear language model with SGD");
  add_train_options(train_ll, ll_opts, true);
  train_ll->add_option("--features", features, "Comma-separated feature templates")->capture_default_str();
  add_seed(train_ll);
  add_config(train_ll);

  // train-ffnnlm
  TrainOptions ff_opts;
  FFNNLMConfig ff_config;
  std::string nonlinearity = "tanh";
  auto* train_ff = app.add_subcommand("train-ffnnlm", "Train a feed-forward neural language model");
  add_train_options(train_ff, ff_opts, true);
  train_ff->add_option("--order", ff_config.order)->capture_default_str();
  train_ff->add_option("--embed", ff_config.embed)->capture_default_str();
  train_ff->add_option("--hidden", ff_config.hidden)->capture_default_str();
  train_ff->add_option("--nonlinearity", nonlinearity)->check(CLI::IsMember({"tanh", "relu"}))->capture_default_str();
  add_seed(train_ff);
  add_config(train_ff);

  // train-rnnlm
  TrainOptions rnn_opts;
  RnnLMConfig rnn_config;
  std::string rnn_cell = "lstm_forget";
  auto* train_rnn = app.add_subcommand("train-rnnlm", "Train a recurrent neural language model");
  add_train_options(train_rnn, rnn_opts, true);
  train_rnn->add_option("--cell", rnn_cell)->check(CLI::IsMember({"rnn", "lstm", "lstm_forget", "gru"}))
      ->capture_default_str();
  train_rnn->add_option("--layers", rnn_config.layers)->capture_default_str();
  train_rnn->add_option("--embed", rnn_config.embed)->capture_default_str();
  train_rnn->add_option("--hidden", rnn_config.hidden)->capture_default_str();
  train_rnn->add_flag("--residual", rnn_config.residual, "Residual connections between layers");
  add_seed(train_rnn);
  add_config(train_rnn);

  // train-encdec
  TrainOptions ed_opts;
  EncDecConfig ed_config;
  std::string ed_cell = "lstm_forget", encoder = "bidir", bridge = "tanh", attention = "mlp";
  std::string train_src, train_tgt, dev_src, dev_tgt;
  auto* train_ed = app.add_subcommand("train-encdec", "Train an encoder-decoder translation model");
  add_train_options(train_ed, ed_opts, true);
  train_ed->remove_option(train_ed->get_option("--train"));
  train_ed->remove_option(train_ed->get_option("--dev"));
  train_ed->add_option("--train-src", train_src, "Source side of the training corpus")->required();
  train_ed->add_option("--train-tgt", train_tgt, "Target side of the training corpus")->required();
  train_ed->add_option("--dev-src", dev_src);
  train_ed->add_option("--dev-tgt", dev_tgt);
  train_ed->add_option("--cell", ed_cell)->check(CLI::IsMember({"rnn", "lstm", "lstm_forget", "gru"}))
      ->capture_default_str();
  train_ed->add_option("--layers", ed_config.layers)->capture_default_str();
  train_ed->add_option("--embed", ed_config.embed)->capture_default_str();
  train_ed->add_option("--enc-hidden", ed_config.enc_hidden)->capture_default_str();
  train_ed->add_option("--dec-hidden", ed_config.dec_hidden)->capture_default_str();
  train_ed->add_option("--encoder", encoder)->check(CLI::IsMember({"forward", "reverse", "bidir"}))
      ->capture_default_str();
  train_ed->add_option("--bridge", bridge)->check(CLI::IsMember({"final", "concat", "tanh"}))->capture_default_str();
  train_ed->add_option("--attention", attention)->check(CLI::IsMember({"none", "dot", "bilinear", "mlp"}))
      ->capture_default_str();
  train_ed->add_option("--attention-hidden", ed_config.attention_hidden)->capture_default_str();
  add_seed(train_ed);
  add_config(train_ed);

  // eval-ppl
  std::string eval_model, eval_test, eval_src, eval_tgt, eval_output;
  auto* eval_ppl = app.add_subcommand("eval-ppl", "Log-likelihood and perplexity of a corpus");
  eval_ppl->add_option("--model", eval_model)->required();
  eval_ppl->add_option("--test", eval_test, "Corpus for language models");
  eval_ppl->add_option("--src", eval_src, "Source side for encdec models");
  eval_ppl->add_option("--tgt", eval_tgt, "Target side for encdec models");
  eval_ppl->add_option("--output", eval_output, "Report file (default: standard output)");
  add_config(eval_ppl);

  // translate
  std::string tr_model;
  DecodeOptions tr_opts;
  auto* translate = app.add_subcommand("translate", "Decode source sentences with an encdec model");
  translate->add_option("--model", tr_model)->required();
  add_decode_options(translate, tr_opts);
  add_seed(translate);
  add_config(translate);

  // ensemble-translate
  std::vector<std::string> ens_models;
  DecodeOptions ens_opts;
  auto* ensemble = app.add_subcommand("ensemble-translate", "Decode with the averaged distribution of several models");
  ensemble->add_option("--models", ens_models, "Comma-separated model files")->required()->delimiter(',');
  add_decode_options(ensemble, ens_opts);
  add_seed(ensemble);
  add_config(ensemble);

  // sample
  std::string sample_model, sample_input, sample_output;
  std::size_t sample_count = 10, sample_max_len = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw ancestral samples");
  sample_cmd->add_option("--model", sample_model)->required();
  sample_cmd->add_option("--count", sample_count, "Samples (per source line for encdec models)")
      ->capture_default_str();
  sample_cmd->add_option("--input", sample_input, "Source sentences for encdec models");
  sample_cmd->add_option("--output", sample_output);
  sample_cmd->add_option("--max-len", sample_max_len, "Length limit (0: model default)");
  add_seed(sample_cmd);
  add_config(sample_cmd);

  // bleu
  std::string bleu_hyp, bleu_ref, bleu_output;
  auto* bleu_cmd = app.add_subcommand("bleu", "Corpus BLEU against one reference per line");
  bleu_cmd->add_option("--hyp", bleu_hyp)->required();
  bleu_cmd->add_option("--ref", bleu_ref)->required();
  bleu_cmd->add_option("--output", bleu_output);
  add_config(bleu_cmd);

  std::vector<std::string> args;
  try {
    args = expand_config_files(raw_args);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  try {
    // CLI11 consumes a reversed argument list without the program name
    std::vector<std::string> reversed;
    if (!args.empty()) reversed.assign(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    RunSeeds seeds(seed);

    if (*train_ngram) {
      const auto lines = read_lines(ngram_opts.train);
      const Vocabulary vocab = build_vocab(lines, VocabPolicy::keep_all(), ngram_opts.v_all);
      const auto corpus = encode_all(vocab, lines, true);
      if (ngram_order == 0) throw ConfigError("--order must be positive");
      if (alpha.size() == 1) alpha.assign(ngram_order, alpha[0]);
      if (alpha.size() != ngram_order) {
        throw ConfigError("--alpha needs 1 or " + std::to_string(ngram_order) + " values, got " +
                          std::to_string(alpha.size()));
      }
      for (double a : alpha) {
        if (!(a > 0.0 && a <= 1.0)) throw ConfigError("--alpha values must lie in (0, 1]");
      }
      const NGramModel model = NGramModel::train(vocab, corpus, ngram_order, InterpolationWeights{alpha});
      TrainLog log;
      EpochStats stats;
      stats.epoch = 1;
      stats.train_loss = -evaluate(model, corpus).total_log_likelihood;
      if (!ngram_opts.dev.empty()) {
        const EvalReport dev = evaluate(model, read_corpus(ngram_opts.dev, vocab));
        stats.dev_ll = dev.total_log_likelihood;
        stats.dev_ppl = dev.perplexity;
      }
      log.epochs.push_back(stats);
      log.best_epoch = 1;
      save_model(ngram_opts.model, model);
      finish_training(ngram_opts, log);
      return kExitOk;
    }

    if (*train_ll) {
      const auto lines = read_lines(ll_opts.train);
      const Vocabulary vocab = build_vocab(lines, vocab_policy(ll_opts), ll_opts.v_all);
      const auto corpus = encode_all(vocab, lines, true);
      const auto dev = ll_opts.dev.empty() ? std::vector<Sentence>{} : read_corpus(ll_opts.dev, vocab);
      LogLinearLM model(vocab, features);
      const TrainSchedule schedule = make_schedule(ll_opts, seeds.next());
      const TrainLog log = train_sgd(model, corpus, dev, schedule);
      save_model(ll_opts.model, model, run_record(schedule, seed));
      finish_training(ll_opts, log);
      return kExitOk;
    }

    if (*train_ff) {
      const auto lines = read_lines(ff_opts.train);
      const Vocabulary vocab = build_vocab(lines, vocab_policy(ff_opts), ff_opts.v_all);
      const auto corpus = encode_all(vocab, lines, true);
      const auto dev = ff_opts.dev.empty() ? std::vector<Sentence>{} : read_corpus(ff_opts.dev, vocab);
      ff_config.nonlinearity = parse_nonlinearity(nonlinearity);
      FFNNLM model(vocab, ff_config, seeds.next());
      const TrainSchedule schedule = make_schedule(ff_opts, seeds.next());
      const TrainLog log = train_ffnnlm(model, corpus, dev, schedule);
      save_model(ff_opts.model, model, run_record(schedule, seed));
      finish_training(ff_opts, log);
      return kExitOk;
    }

    if (*train_rnn) {
      const auto lines = read_lines(rnn_opts.train);
      const Vocabulary vocab = build_vocab(lines, vocab_policy(rnn_opts), rnn_opts.v_all);
      const auto corpus = encode_all(vocab, lines, true);
      const auto dev = rnn_opts.dev.empty() ? std::vector<Sentence>{} : read_corpus(rnn_opts.dev, vocab);
      rnn_config.cell = parse_cell_kind(rnn_cell);
      RnnLM model(vocab, rnn_config, seeds.next());
      const TrainSchedule schedule = make_schedule(rnn_opts, seeds.next());
      const TrainLog log = train_rnnlm(model, corpus, dev, schedule);
      save_model(rnn_opts.model, model, run_record(schedule, seed));
      finish_training(rnn_opts, log);
      return kExitOk;
    }

    if (*train_ed) {
      if (dev_src.empty() != dev_tgt.empty()) throw ConfigError("--dev-src and --dev-tgt go together");
      const auto src_lines = read_lines(train_src);
      const auto tgt_lines = read_lines(train_tgt);
      const Vocabulary src_vocab = build_vocab(src_lines, vocab_policy(ed_opts), ed_opts.v_all);
      const Vocabulary tgt_vocab = build_vocab(tgt_lines, vocab_policy(ed_opts), ed_opts.v_all);
      const auto pairs = read_pairs(train_src, train_tgt, src_vocab, tgt_vocab);
      const auto dev = dev_src.empty() ? std::vector<SentencePair>{}
                                       : read_pairs(dev_src, dev_tgt, src_vocab, tgt_vocab);
      ed_config.cell = parse_cell_kind(ed_cell);
      ed_config.direction = parse_encoder_direction(encoder);
      ed_config.bridge = parse_bridge_kind(bridge);
      ed_config.attention = parse_attention_kind(attention);
      EncDecModel model(src_vocab, tgt_vocab, ed_config, seeds.next());
      const TrainSchedule schedule = make_schedule(ed_opts, seeds.next());
      const TrainLog log = train_encdec(model, pairs, dev, schedule);
      Hyperparameters record = run_record(schedule, seed);
      record["length_counts"] =
          encode_length_counts(LengthPrior::from_pairs(pairs, LengthPrior::Mode::multinomial_prior));
      save_model(ed_opts.model, model, record);
      finish_training(ed_opts, log);
      return kExitOk;
    }

    if (*eval_ppl) {
      const LoadedModel loaded = load(eval_model);
      EvalReport report;
      if (const auto* ed = std::get_if<EncDecModel>(&loaded.model)) {
        if (eval_src.empty() || eval_tgt.empty()) throw ConfigError("encdec models need --src and --tgt");
        report = evaluate(*ed, read_pairs(eval_src, eval_tgt, ed->source_vocab(), ed->target_vocab()));
      } else {
        if (eval_test.empty()) throw ConfigError("language models need --test");
        report = std::visit(
            [&](const auto& m) -> EvalReport {
              if constexpr (std::is_same_v<std::decay_t<decltype(m)>, EncDecModel>) {
                return {};
              } else {
                return evaluate(m, read_corpus(eval_test, m.vocab()));
              }
            },
            loaded.model);
      }
      Sink sink(eval_output, out);
      write_report(sink.stream(), report);
      sink.close(eval_output);
      return kExitOk;
    }

    if (*translate) {
      const LoadedModel loaded = load(tr_model);
      const EncDecModel& model = require_encdec(loaded, tr_model);
      const EncDecStepModel step(model);
      translate_all(step, model.source_vocab(), model.target_vocab(), model.config().attention != AttentionKind::none,
                    length_prior(tr_opts, loaded.file), tr_opts, seeds.next(), out);
      return kExitOk;
    }

    if (*ensemble) {
      std::vector<LoadedModel> loaded;
      for (const std::string& path : ens_models) loaded.push_back(load(path));
      std::vector<std::unique_ptr<StepModel>> steps;
      std::vector<const StepModel*> members;
      bool attentional = false;
      for (std::size_t i = 0; i < loaded.size(); ++i) {
        const EncDecModel& m = require_encdec(loaded[i], ens_models[i]);
        if (m.source_vocab().tokens() != std::get<EncDecModel>(loaded[0].model).source_vocab().tokens()) {
          throw ConfigError(ens_models[i] + " uses a different source vocabulary than " + ens_models[0]);
        }
        attentional = attentional || m.config().attention != AttentionKind::none;
        steps.push_back(std::make_unique<EncDecStepModel>(m));
        members.push_back(steps.back().get());
      }
      const EnsembleModel combined(members);
      const EncDecModel& first = std::get<EncDecModel>(loaded[0].model);
      translate_all(combined, first.source_vocab(), first.target_vocab(), attentional,
                    length_prior(ens_opts, loaded[0].file), ens_opts, seeds.next(), out);
      return kExitOk;
    }

    if (*sample_cmd) {
      const LoadedModel loaded = load(sample_model);
      const auto model = step_model(loaded.model);
      Sink sink(sample_output, out);
      std::ostream& o = sink.stream();
      const Vocabulary& vocab = *model->vocabulary();
      if (const auto* ed = std::get_if<EncDecModel>(&loaded.model)) {
        if (sample_input.empty()) throw ConfigError("encdec models need --input");
        for (const std::string& line : read_lines(sample_input)) {
          const Sentence source = encode(ed->source_vocab(), line, false);
          for (std::size_t k = 0; k < sample_count; ++k) {
            o << decode(vocab, sample(*model, source, seeds.next(), sample_max_len).tokens) << '\n';
          }
        }
      } else {
        for (std::size_t k = 0; k < sample_count; ++k) {
          o << decode(vocab, sample(*model, {}, seeds.next(), sample_max_len).tokens) << '\n';
        }
      }
      sink.close(sample_output);
      return kExitOk;
    }

    if (*bleu_cmd) {
      const BleuReport report = bleu_lines(read_lines(bleu_hyp), read_lines(bleu_ref));
      Sink sink(bleu_output, out);
      write_report(sink.stream(), report);
      sink.close(bleu_output);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace s2sw::cli
