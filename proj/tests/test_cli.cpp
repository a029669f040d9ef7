// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "s2sw/cli.hpp"
#include "s2sw/error.hpp"
#include "s2sw/model_file.hpp"
#include "s2sw/neural_lm.hpp"

using namespace s2sw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "s2sw_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "s2sw");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

double report_value(const std::string& report, const std::string& key) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "\t", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  FAIL("missing key " << key);
  return 0.0;
}

// Copy pairs over a four-letter alphabet.
void write_copy_corpus(const std::string& stem, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> letter(0, 3), len(1, 4);
  std::ofstream src(scratch(stem + ".src")), tgt(scratch(stem + ".tgt"));
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    for (int k = len(rng); k > 0; --k) {
      if (!line.empty()) line += ' ';
      line += static_cast<char>('a' + letter(rng));
    }
    src << line << '\n';
    tgt << line << '\n';
  }
}

const std::string& small_encdec() {
  static const std::string path = [] {
    write_copy_corpus("copy", 60, 3);
    const std::string model = scratch("copy.s2sw").string();
    const Result r = run_cli({"train-encdec", "--train-src", scratch("copy.src").string(), "--train-tgt",
                              scratch("copy.tgt").string(), "--model", model, "--epochs", "2", "--optimizer",
                              "adam", "--lr", "0.01", "--embed", "6", "--enc-hidden", "6", "--dec-hidden", "8",
                              "--attention-hidden", "4", "--unk", "keep_all"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return model;
  }();
  return path;
}

}  // namespace

TEST_CASE("config files expand ahead of explicit flags") {
  const std::string cfg = write_file("a.cfg", "# comment\n\norder = 1\n alpha=0.5 \n");
  const auto expanded = cli::expand_config_files({"s2sw", "train-ngram", "--config", cfg, "--order", "2"});
  const std::vector<std::string> want{"s2sw", "train-ngram", "--order=1", "--alpha=0.5", "--order", "2"};
  CHECK(expanded == want);
  CHECK_THROWS_AS(cli::expand_config_files({"s2sw", "bleu", "--config"}), ConfigError);
  CHECK_THROWS_AS(cli::expand_config_files({"s2sw", "bleu", "--config", scratch("none.cfg").string()}), DataError);
  const std::string bad = write_file("bad.cfg", "order 2\n");
  CHECK_THROWS_AS(cli::expand_config_files({"s2sw", "bleu", "--config=" + bad}), ConfigError);
}

TEST_CASE("explicit flags override the config file") {
  const std::string train = write_file("ab.txt", "a b\na a\n");
  const std::string cfg = write_file("ngram.cfg", "order = 1\nalpha = 0.25\n");
  const std::string model = scratch("cfg.s2sw").string();
  const Result r = run_cli({"train-ngram", "--config", cfg, "--train", train, "--model", model, "--order", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::ifstream in(model, std::ios::binary);
  const ModelFile f = read_model_file(in, model);
  CHECK(f.hyperparameters.at("order") == "2");
  CHECK(f.hyperparameters.at("alpha") == "0.25,0.25");
}

TEST_CASE("uniform model scores perplexity ten through eval-ppl") {
  std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g"};
  FFNNLM lm(Vocabulary::from_tokens(words), FFNNLMConfig{.order = 2, .embed = 4, .hidden = 3}, 1);
  for (auto& p : lm.params()) p->value.set_zero();
  const std::string model = scratch("uniform.s2sw").string();
  save_model(model, lm);
  const std::string test = write_file("uniform.txt", "a b c\nd\n\n");
  const Result r = run_cli({"eval-ppl", "--model", model, "--test", test});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(report_value(r.out, "word_count") == 7);
  CHECK(report_value(r.out, "perplexity") == doctest::Approx(10.0).epsilon(1e-11));
  CHECK(report_value(r.out, "per_word_ll") == doctest::Approx(-std::log(10.0)).epsilon(1e-11));
  CHECK(r.out.find("unk_log_portion\t0\n") != std::string::npos);

  const std::string report = scratch("uniform.report").string();
  REQUIRE(run_cli({"eval-ppl", "--model", model, "--test", test, "--output", report}).code == 0);
  CHECK(slurp(report) == r.out);
}

TEST_CASE("bigram counts with vanishing interpolation reproduce maximum likelihood") {
  // p(a|<s>) = 1, p(b|a) = p(a|a) = p(</s>|a) = 1/3, p(</s>|b) = 1: 1/27 over 6 tokens
  const std::string train = write_file("mle.txt", "a b\na a\n");
  const std::string model = scratch("mle.s2sw").string();
  const std::string metrics = scratch("mle.tsv").string();
  const Result trained = run_cli({"train-ngram", "--train", train, "--dev", train, "--model", model, "--order", "2",
                                  "--alpha", "1e-9", "--metrics", metrics});
  REQUIRE_MESSAGE(trained.code == 0, trained.err);
  const Result r = run_cli({"eval-ppl", "--model", model, "--test", train});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(report_value(r.out, "perplexity") == doctest::Approx(std::sqrt(3.0)).epsilon(1e-7));
  CHECK(report_value(r.out, "total_log_likelihood") == doctest::Approx(-std::log(27.0)).epsilon(1e-7));

  std::istringstream lines(slurp(metrics));
  std::string epoch, loss, dev_ll, dev_ppl;
  REQUIRE(std::getline(lines, epoch, '\t'));
  REQUIRE(std::getline(lines, loss, '\t'));
  REQUIRE(std::getline(lines, dev_ll, '\t'));
  REQUIRE(std::getline(lines, dev_ppl, '\n'));
  CHECK(epoch == "1");
  CHECK(std::stod(loss) == doctest::Approx(std::log(27.0)).epsilon(1e-7));
  CHECK(std::stod(dev_ll) == doctest::Approx(-std::log(27.0)).epsilon(1e-7));
  CHECK(std::stod(dev_ppl) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-7));
}

TEST_CASE("neural training writes one metrics line per epoch") {
  const std::string train = write_file("lm.txt", "a b c\nb c\nc a b a\na\n");
  const std::string metrics = scratch("rnn.tsv").string();
  const Result r = run_cli({"train-rnnlm", "--train", train, "--dev", train, "--model",
                            scratch("rnn.s2sw").string(), "--metrics", metrics, "--epochs", "3", "--embed", "4",
                            "--hidden", "5", "--cell", "gru"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream in(slurp(metrics));
  std::string line;
  unsigned n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream fields(line);
    unsigned epoch = 0;
    double loss = 0, ll = 0, ppl = 0;
    REQUIRE(static_cast<bool>(fields >> epoch >> loss >> ll >> ppl));
    CHECK(epoch == n);
    CHECK(std::count(line.begin(), line.end(), '\t') == 3);
    CHECK(ll < 0.0);
    CHECK(ppl > 1.0);
  }
  CHECK(n == 3);
}

TEST_CASE("the same seed gives the same model file") {
  const std::string train = write_file("seed.txt", "a b c\nb c\nc a b a\na\nb b\n");
  auto train_with = [&](const std::string& seed, const std::string& name) {
    const std::string model = scratch(name).string();
    const Result r = run_cli({"train-ffnnlm", "--train", train, "--model", model, "--epochs", "2", "--order", "3",
                              "--embed", "3", "--hidden", "4", "--batch-size", "2", "--seed", seed});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return slurp(model);
  };
  const std::string a = train_with("7", "s1.s2sw");
  CHECK(a == train_with("7", "s2.s2sw"));
  CHECK(a != train_with("8", "s3.s2sw"));
}

TEST_CASE("beam size one matches greedy byte for byte") {
  const std::string model = small_encdec();
  const std::string input = scratch("copy.src").string();
  const Result greedy = run_cli({"translate", "--model", model, "--input", input});
  const Result beam =
      run_cli({"translate", "--model", model, "--input", input, "--search", "beam", "--beam-size", "1"});
  REQUIRE(greedy.code == 0);
  REQUIRE(beam.code == 0);
  CHECK(std::count(greedy.out.begin(), greedy.out.end(), '\n') == 60);
  CHECK(greedy.out == beam.out);
}

TEST_CASE("n-best output and the decoding variants") {
  const std::string model = small_encdec();
  const std::string input = write_file("two.src", "a b\nc\n");
  const Result r = run_cli({"translate", "--model", model, "--input", input, "--search", "beam", "--beam-size", "3",
                            "--nbest", "3", "--length-norm", "prior"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto first = line.find(" ||| ");
    const auto second = line.find(" ||| ", first + 5);
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    CHECK((line.substr(0, first) == "0" || line.substr(0, first) == "1"));
    CHECK(std::stod(line.substr(second + 5)) <= 0.0);
    ++n;
  }
  CHECK(n == 6);

  const std::vector<std::vector<std::string>> variants{
      {"--replace-unk"}, {"--search", "sample", "--seed", "3"}, {"--length-norm", "perword", "--search", "beam"}};
  for (const auto& extra : variants) {
    std::vector<std::string> args{"translate", "--model", model, "--input", input};
    args.insert(args.end(), extra.begin(), extra.end());
    const Result v = run_cli(args);
    CHECK_MESSAGE(v.code == 0, v.err);
    CHECK(std::count(v.out.begin(), v.out.end(), '\n') == 2);
  }

  const Result ens = run_cli({"ensemble-translate", "--models", model + "," + model, "--input", input});
  const Result single = run_cli({"translate", "--model", model, "--input", input});
  REQUIRE(ens.code == 0);
  CHECK(ens.out == single.out);

  const Result samples = run_cli({"sample", "--model", model, "--input", input, "--count", "4"});
  REQUIRE(samples.code == 0);
  CHECK(std::count(samples.out.begin(), samples.out.end(), '\n') == 8);
}

TEST_CASE("bleu subcommand") {
  const std::string hyp = write_file("hyp.txt", "a b c d\n");
  const std::string ref = write_file("ref.txt", "a b c d\n");
  const Result r = run_cli({"bleu", "--hyp", hyp, "--ref", ref});
  REQUIRE(r.code == 0);
  CHECK(report_value(r.out, "bleu") == 1.0);
  CHECK(report_value(r.out, "precision_4") == 1.0);
}

TEST_CASE("exit codes") {
  const std::string train = write_file("codes.txt", "a b\nb a\n");
  const std::string model = scratch("codes.s2sw").string();
  REQUIRE(run_cli({"train-ngram", "--train", train, "--model", model}).code == cli::kExitOk);

  SUBCASE("usage") {
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run_cli({"train-ngram", "--train", train}).code == cli::kExitUsage);
    CHECK(run_cli({"train-ngram", "--train", train, "--model", model, "--bogus"}).code == cli::kExitUsage);
    CHECK(run_cli({"train-rnnlm", "--train", train, "--model", model, "--cell", "gpt"}).code == cli::kExitUsage);
    CHECK(run_cli({"train-ngram", "--train", train, "--model", model, "--order", "3", "--alpha", "0.1,0.2"}).code ==
          cli::kExitUsage);
    CHECK(run_cli({"train-ngram", "--train", train, "--model", model, "--alpha", "1.5"}).code == cli::kExitUsage);
    CHECK(run_cli({"translate", "--model", model, "--input", train}).code == cli::kExitUsage);
    CHECK(run_cli({"eval-ppl", "--model", model}).code == cli::kExitUsage);
  }
  SUBCASE("help") {
    const Result r = run_cli({"--help"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("train-encdec") != std::string::npos);
    CHECK(run_cli({"translate", "--help"}).out.find("--beam-size") != std::string::npos);
  }
  SUBCASE("data") {
    CHECK(run_cli({"train-ngram", "--train", scratch("absent.txt").string(), "--model", model}).code == cli::kExitData);
    CHECK(run_cli({"eval-ppl", "--model", scratch("absent.s2sw").string(), "--test", train}).code == cli::kExitData);
    const std::string junk = write_file("junk.s2sw", "not a model");
    const Result r = run_cli({"eval-ppl", "--model", junk, "--test", train});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("S2SW") != std::string::npos);
    const std::string three = write_file("three.txt", "a\nb\nc\n");
    CHECK(run_cli({"train-encdec", "--train-src", train, "--train-tgt", three, "--model", model}).code ==
          cli::kExitData);
    CHECK(run_cli({"bleu", "--hyp", train, "--ref", three}).code == cli::kExitData);
  }
  SUBCASE("divergence") {
    const Result r = run_cli({"train-rnnlm", "--train", train, "--model", scratch("div.s2sw").string(), "--epochs",
                              "3", "--lr", "1e300", "--clip", "0", "--embed", "4", "--hidden", "4"});
    CHECK(r.code == cli::kExitDivergence);
    CHECK(r.err.find("diverged") != std::string::npos);
  }
}
