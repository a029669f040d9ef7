// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Portable binary model files. Layout, all integers little-endian:
//
//   "S2SW" | u32 version | str kind
//   u32 #vocabularies  { u64 v_all | u32 #tokens { str } }
//   u32 #hyperparameters { str key | str value }
//   u32 #tensors { str name | u32 rank | u64 dims[rank] | f64 values (row-major) }
//   u64 #n-gram entries { u32 length | u32 ids[length] | u64 count }
//
// where str is a u32 byte count followed by UTF-8 bytes.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "s2sw/corpus.hpp"
#include "s2sw/loglinear.hpp"
#include "s2sw/neural_lm.hpp"
#include "s2sw/ngram.hpp"
#include "s2sw/seq2seq.hpp"
#include "s2sw/tensor.hpp"

namespace s2sw {

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelKind { ngram, loglinear, ffnnlm, rnnlm, encdec };
ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

using Hyperparameters = std::map<std::string, std::string>;

/// The decoded container, independent of any model class.
struct ModelFile {
  ModelKind kind = ModelKind::ngram;
  std::vector<Vocabulary> vocabularies;  // one, or {source, target}
  Hyperparameters hyperparameters;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::pair<std::vector<TokenId>, std::uint64_t>> ngram_counts;
};

void write_model_file(std::ostream& out, const ModelFile& file);
/// Throws DataError on a bad magic, an unsupported version or truncation;
/// `origin` names the source in messages.
ModelFile read_model_file(std::istream& in, const std::string& origin);

using AnyModel = std::variant<NGramModel, LogLinearLM, FFNNLM, RnnLM, EncDecModel>;

/// `extra` lands in the hyperparameter block (e.g. the optimizer settings
/// used for training); model keys take precedence.
ModelFile to_model_file(const NGramModel& m, const Hyperparameters& extra = {});
ModelFile to_model_file(const LogLinearLM& m, const Hyperparameters& extra = {});
ModelFile to_model_file(const FFNNLM& m, const Hyperparameters& extra = {});
ModelFile to_model_file(const RnnLM& m, const Hyperparameters& extra = {});
ModelFile to_model_file(const EncDecModel& m, const Hyperparameters& extra = {});
ModelFile to_model_file(const AnyModel& m, const Hyperparameters& extra = {});

AnyModel from_model_file(const ModelFile& file);

void save_model_file(const std::string& path, const ModelFile& file);

template <typename Model>
void save_model(const std::string& path, const Model& model, const Hyperparameters& extra = {}) {
  save_model_file(path, to_model_file(model, extra));
}

/// Throws DataError naming the path when it cannot be read or parsed.
AnyModel load_model(const std::string& path);

/// Hyperparameters of the optimizer, for recording alongside a model.
Hyperparameters describe(const OptimizerConfig& config);

}  // namespace s2sw
