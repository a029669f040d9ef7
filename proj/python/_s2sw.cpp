// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <sstream>

#include "s2sw/cli.hpp"
#include "s2sw/error.hpp"
#include "s2sw/eval.hpp"
#include "s2sw/model_file.hpp"
#include "s2sw/search.hpp"

namespace py = pybind11;
using namespace s2sw;

namespace {

py::dict to_dict(const EvalReport& r) {
  py::dict d;
  d["total_log_likelihood"] = r.total_log_likelihood;
  d["word_count"] = r.word_count;
  d["per_word_ll"] = r.per_word_ll;
  d["perplexity"] = r.perplexity;
  d["unk_count"] = r.unk_count;
  d["unk_log_portion"] = r.unk_log_portion;
  return d;
}

py::dict to_dict(const BleuReport& r) {
  py::dict d;
  d["bleu"] = r.bleu;
  d["brevity_penalty"] = r.brevity_penalty;
  d["precisions"] = r.precisions;
  d["hyp_length"] = r.hyp_length;
  d["ref_length"] = r.ref_length;
  return d;
}

// Python-facing handle; the C++ models are move-only.
class Model {
 public:
  explicit Model(AnyModel m) : model_(std::make_shared<AnyModel>(std::move(m))) {}

  static Model load(const std::string& path) { return Model(load_model(path)); }
  void save(const std::string& path) const { save_model_file(path, to_model_file(*model_)); }

  std::string kind() const { return to_string(to_model_file(*model_).kind); }
  bool is_encdec() const { return std::holds_alternative<EncDecModel>(*model_); }

  EvalReport evaluate(const std::vector<std::string>& lines,
                      const std::optional<std::vector<std::string>>& targets) const {
    if (const auto* ed = std::get_if<EncDecModel>(model_.get())) {
      if (!targets) throw ConfigError("encdec models score (source, target) pairs; pass targets");
      if (targets->size() != lines.size()) throw DataError("source and target line counts differ");
      std::vector<SentencePair> pairs;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        pairs.push_back({encode(ed->source_vocab(), lines[i], false), encode(ed->target_vocab(), (*targets)[i], true)});
      }
      return s2sw::evaluate(*ed, pairs);
    }
    if (targets) throw ConfigError("language models take a single corpus");
    return std::visit(
        [&](const auto& m) -> EvalReport {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, EncDecModel>) {
            return {};
          } else {
            return s2sw::evaluate(m, encode_all(m.vocab(), lines, true));
          }
        },
        *model_);
  }

  std::vector<std::vector<std::pair<std::string, double>>> translate(const std::vector<std::string>& lines,
                                                                      const std::string& search, std::size_t beam_size,
                                                                      std::size_t nbest, std::size_t max_len,
                                                                      std::uint64_t seed) const {
    const auto* ed = std::get_if<EncDecModel>(model_.get());
    if (ed == nullptr) throw ConfigError("translate needs an encdec model");
    const EncDecStepModel step(*ed);
    std::vector<std::vector<std::pair<std::string, double>>> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const Sentence source = encode(ed->source_vocab(), lines[i], false);
      std::vector<Hypothesis> hyps;
      if (search == "beam") {
        hyps = beam_search(step, source, BeamOptions{.beam = beam_size, .max_len = max_len});
      } else if (search == "greedy") {
        hyps.push_back(greedy(step, source, max_len));
      } else if (search == "sample") {
        hyps.push_back(sample(step, source, seed + i, max_len));
      } else {
        throw ConfigError("unknown search '" + search + "'");
      }
      auto& row = out.emplace_back();
      for (std::size_t k = 0; k < hyps.size() && k < std::max<std::size_t>(nbest, 1); ++k) {
        row.emplace_back(decode(ed->target_vocab(), hyps[k].tokens), hyps[k].score);
      }
    }
    return out;
  }

  std::vector<std::string> draw(std::size_t count, std::uint64_t seed, std::size_t max_len,
                                const std::optional<std::string>& source) const {
    std::unique_ptr<StepModel> step = std::visit(
        [](const auto& m) -> std::unique_ptr<StepModel> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, NGramModel>) return std::make_unique<NGramStepModel>(m);
          else if constexpr (std::is_same_v<T, LogLinearLM>) return std::make_unique<LogLinearStepModel>(m);
          else if constexpr (std::is_same_v<T, FFNNLM>) return std::make_unique<FFNNStepModel>(m);
          else if constexpr (std::is_same_v<T, RnnLM>) return std::make_unique<RnnStepModel>(m);
          else return std::make_unique<EncDecStepModel>(m);
        },
        *model_);
    Sentence src;
    if (const auto* ed = std::get_if<EncDecModel>(model_.get())) {
      if (!source) throw ConfigError("encdec models need a source sentence");
      src = encode(ed->source_vocab(), *source, false);
    }
    std::vector<std::string> out;
    for (std::size_t k = 0; k < count; ++k) {
      out.push_back(decode(*step->vocabulary(), sample(*step, src, seed + k, max_len).tokens));
    }
    return out;
  }

 private:
  std::shared_ptr<AnyModel> model_;
};

}  // namespace

PYBIND11_MODULE(_s2sw, m) {
  m.doc() = "Language models and encoder-decoder translation";

  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  (void)data_error;

  m.attr("MODEL_FORMAT_VERSION") = kModelFormatVersion;

  m.def("split_tokens", [](const std::string& line) { return split_tokens(line); });

  m.def(
      "train_ngram",
      [](const std::vector<std::string>& lines, unsigned order, std::vector<double> alpha, std::uint64_t v_all) {
        if (alpha.size() == 1) alpha.assign(order, alpha[0]);
        const Vocabulary vocab = build_vocab(lines, VocabPolicy::keep_all(), v_all);
        const auto corpus = encode_all(vocab, lines, true);
        return Model(NGramModel::train(vocab, corpus, order, InterpolationWeights{alpha}));
      },
      py::arg("lines"), py::arg("order") = 3, py::arg("alpha") = std::vector<double>{0.1},
      py::arg("v_all") = kDefaultVocabAll);

  m.def(
      "bleu",
      [](const std::vector<std::string>& hyps, const std::vector<std::string>& refs, std::size_t max_n) {
        return to_dict(bleu_lines(hyps, refs, max_n));
      },
      py::arg("hypotheses"), py::arg("references"), py::arg("max_n") = 4);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "s2sw");
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command line; returns (exit_code, stdout, stderr).");

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def_property_readonly("kind", &Model::kind)
      .def_property_readonly("is_encdec", &Model::is_encdec)
      .def(
          "evaluate",
          [](const Model& self, const std::vector<std::string>& lines,
             const std::optional<std::vector<std::string>>& targets) {
            EvalReport r;
            {
              py::gil_scoped_release release;
              r = self.evaluate(lines, targets);
            }
            return to_dict(r);
          },
          py::arg("lines"), py::arg("targets") = py::none())
      .def("translate", &Model::translate, py::arg("lines"), py::arg("search") = "greedy", py::arg("beam_size") = 5,
           py::arg("nbest") = 1, py::arg("max_len") = 0, py::arg("seed") = 42,
           py::call_guard<py::gil_scoped_release>())
      .def("sample", &Model::draw, py::arg("count") = 1, py::arg("seed") = 42, py::arg("max_len") = 0,
           py::arg("source") = py::none());
}
