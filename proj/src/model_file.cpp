// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/model_file.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "s2sw/error.hpp"

namespace s2sw {

namespace {

constexpr std::array<char, 4> kMagic{'S', '2', 'S', 'W'};

// Guards against absurd sizes in corrupt files before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { little_endian(v, 4); }
  void u64(std::uint64_t v) { little_endian(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

 private:
  void little_endian(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, bytes);
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const std::string& origin) : in_(in), origin_(origin) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(little_endian(4)); }
  std::uint64_t u64() { return little_endian(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  void raw(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated");
  }
  std::uint64_t count(std::uint64_t n, const char* what) {
    if (n > kMaxElements) fail(std::string("implausible ") + what + " count " + std::to_string(n));
    return n;
  }
  [[noreturn]] void fail(const std::string& why) const { throw DataError(origin_ + ": model file " + why); }

 private:
  std::uint64_t little_endian(int bytes) {
    unsigned char buf[8];
    raw(reinterpret_cast<char*>(buf), static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
  const std::string& origin_;
};

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ',';
    out += format_double(v);
  }
  return out;
}

const std::string& require(const Hyperparameters& h, const std::string& key) {
  const auto it = h.find(key);
  if (it == h.end()) throw DataError("model file lacks hyperparameter '" + key + "'");
  return it->second;
}

std::uint64_t require_uint(const Hyperparameters& h, const std::string& key) {
  const std::string& s = require(h, key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("hyperparameter '" + key + "' is not an unsigned integer: '" + s + "'");
  }
  return v;
}

bool require_bool(const Hyperparameters& h, const std::string& key) {
  const std::string& s = require(h, key);
  if (s == "true") return true;
  if (s == "false") return false;
  throw DataError("hyperparameter '" + key + "' is not true/false: '" + s + "'");
}

std::vector<double> require_doubles(const Hyperparameters& h, const std::string& key) {
  const std::string& s = require(h, key);
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = std::min(s.find(',', pos), s.size());
    double v = 0.0;
    const auto res = std::from_chars(s.data() + pos, s.data() + end, v);
    if (res.ec != std::errc() || res.ptr != s.data() + end) {
      throw DataError("hyperparameter '" + key + "' is not a list of numbers: '" + s + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

// Config parsers throw ConfigError; in a file that means corrupt data.
template <typename Fn>
auto parse_field(const Hyperparameters& h, const std::string& key, Fn&& parse) {
  try {
    return parse(require(h, key));
  } catch (const ConfigError& e) {
    throw DataError("hyperparameter '" + key + "': " + e.what());
  }
}

ModelFile start_file(ModelKind kind, const Hyperparameters& extra) {
  ModelFile f;
  f.kind = kind;
  f.hyperparameters = extra;
  return f;
}

void add_params(ModelFile& f, const ParameterCollection& params) {
  for (const auto& p : params) f.tensors.emplace_back(p->name, p->value);
}

void load_params(const ModelFile& f, ParameterCollection& params) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : f.tensors) by_name[name] = &t;
  if (by_name.size() != params.size()) {
    throw DataError("model file has " + std::to_string(by_name.size()) + " tensors, the model needs " +
                    std::to_string(params.size()));
  }
  for (auto& p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw DataError("model file lacks tensor '" + p->name + "'");
    if (!it->second->same_shape(p->value)) {
      throw DataError("tensor '" + p->name + "' has shape " + it->second->shape_str() + ", expected " +
                      p->value.shape_str());
    }
    p->value = *it->second;
  }
}

const Tensor& find_tensor(const ModelFile& f, const std::string& name) {
  for (const auto& [n, t] : f.tensors) {
    if (n == name) return t;
  }
  throw DataError("model file lacks tensor '" + name + "'");
}

void expect_vocabularies(const ModelFile& f, std::size_t n) {
  if (f.vocabularies.size() != n) {
    throw DataError("a " + to_string(f.kind) + " model file needs " + std::to_string(n) + " vocabularies, found " +
                    std::to_string(f.vocabularies.size()));
  }
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "ngram") return ModelKind::ngram;
  if (name == "loglinear") return ModelKind::loglinear;
  if (name == "ffnnlm") return ModelKind::ffnnlm;
  if (name == "rnnlm") return ModelKind::rnnlm;
  if (name == "encdec") return ModelKind::encdec;
  throw DataError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ngram:
      return "ngram";
    case ModelKind::loglinear:
      return "loglinear";
    case ModelKind::ffnnlm:
      return "ffnnlm";
    case ModelKind::rnnlm:
      return "rnnlm";
    case ModelKind::encdec:
      return "encdec";
  }
  return "ngram";
}

void write_model_file(std::ostream& out, const ModelFile& f) {
  Writer w(out);
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kModelFormatVersion);
  w.str(to_string(f.kind));
  w.u32(static_cast<std::uint32_t>(f.vocabularies.size()));
  for (const Vocabulary& v : f.vocabularies) {
    w.u64(v.v_all());
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const std::string& tok : v.tokens()) w.str(tok);
  }
  w.u32(static_cast<std::uint32_t>(f.hyperparameters.size()));
  for (const auto& [k, v] : f.hyperparameters) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(f.tensors.size()));
  for (const auto& [name, t] : f.tensors) {
    w.str(name);
    w.u32(2);
    w.u64(t.rows());
    w.u64(t.cols());
    for (double x : t.data()) w.f64(x);
  }
  w.u64(f.ngram_counts.size());
  for (const auto& [key, c] : f.ngram_counts) {
    w.u32(static_cast<std::uint32_t>(key.size()));
    for (TokenId id : key) w.u32(id);
    w.u64(c);
  }
  if (!out) throw DataError("could not write model file");
}

ModelFile read_model_file(std::istream& in, const std::string& origin) {
  Reader r(in, origin);
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kMagic) r.fail("does not start with S2SW");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    r.fail("has format version " + std::to_string(version) + ", this build reads version " +
           std::to_string(kModelFormatVersion));
  }
  ModelFile f;
  f.kind = parse_model_kind(r.str());

  const std::uint32_t n_vocab = r.u32();
  if (n_vocab > 2) r.fail("has " + std::to_string(n_vocab) + " vocabularies");
  for (std::uint32_t i = 0; i < n_vocab; ++i) {
    const std::uint64_t v_all = r.u64();
    const std::uint64_t n = r.count(r.u32(), "token");
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) tokens.push_back(r.str());
    if (n < 3 || tokens[kBos] != kBosToken || tokens[kEos] != kEosToken || tokens[kUnk] != kUnkToken) {
      r.fail("vocabulary does not start with the reserved tokens");
    }
    Vocabulary v = Vocabulary::from_tokens(tokens, v_all);
    if (v.size() != n) r.fail("vocabulary has duplicate tokens");
    f.vocabularies.push_back(std::move(v));
  }

  const std::uint32_t n_hyper = r.u32();
  for (std::uint32_t i = 0; i < n_hyper; ++i) {
    std::string k = r.str();
    f.hyperparameters[std::move(k)] = r.str();
  }

  const std::uint64_t n_tensors = r.count(r.u32(), "tensor");
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank != 2) r.fail("tensor '" + name + "' has rank " + std::to_string(rank));
    const std::uint64_t rows = r.count(r.u64(), "row");
    const std::uint64_t cols = r.count(r.u64(), "column");
    if (rows * cols > kMaxElements) r.fail("tensor '" + name + "' is implausibly large");
    std::vector<double> data(rows * cols);
    for (double& x : data) x = r.f64();
    f.tensors.emplace_back(std::move(name), Tensor(rows, cols, std::move(data)));
  }

  const std::uint64_t n_counts = r.count(r.u64(), "n-gram");
  f.ngram_counts.reserve(n_counts);
  for (std::uint64_t i = 0; i < n_counts; ++i) {
    std::vector<TokenId> key(r.count(r.u32(), "n-gram length"));
    for (TokenId& id : key) id = r.u32();
    f.ngram_counts.emplace_back(std::move(key), r.u64());
  }
  if (in.peek() != std::char_traits<char>::eof()) r.fail("has trailing bytes");
  return f;
}

ModelFile to_model_file(const NGramModel& m, const Hyperparameters& extra) {
  ModelFile f = start_file(ModelKind::ngram, extra);
  f.vocabularies.push_back(m.vocab());
  f.hyperparameters["order"] = std::to_string(m.order());
  f.hyperparameters["alpha"] = join_doubles(m.weights().alpha);
  for (const auto& [key, c] : m.table().counts()) f.ngram_counts.emplace_back(key, c);
  return f;
}

ModelFile to_model_file(const LogLinearLM& m, const Hyperparameters& extra) {
  ModelFile f = start_file(ModelKind::loglinear, extra);
  f.vocabularies.push_back(m.vocab());
  f.hyperparameters["features"] = m.features().descriptor();
  f.hyperparameters["dimension"] = std::to_string(m.features().dimension());
  f.tensors.emplace_back("W", m.params().weights);
  f.tensors.emplace_back("b", m.params().bias);
  return f;
}

ModelFile to_model_file(const FFNNLM& m, const Hyperparameters& extra) {
  ModelFile f = start_file(ModelKind::ffnnlm, extra);
  f.vocabularies.push_back(m.vocab());
  const FFNNLMConfig& c = m.config();
  f.hyperparameters["order"] = std::to_string(c.order);
  f.hyperparameters["embed"] = std::to_string(c.embed);
  f.hyperparameters["hidden"] = std::to_string(c.hidden);
  f.hyperparameters["nonlinearity"] = to_string(c.nonlinearity);
  add_params(f, m.params());
  return f;
}

ModelFile to_model_file(const RnnLM& m, const Hyperparameters& extra) {
  ModelFile f = start_file(ModelKind::rnnlm, extra);
  f.vocabularies.push_back(m.vocab());
  const RnnLMConfig& c = m.config();
  f.hyperparameters["cell"] = to_string(c.cell);
  f.hyperparameters["layers"] = std::to_string(c.layers);
  f.hyperparameters["embed"] = std::to_string(c.embed);
  f.hyperparameters["hidden"] = std::to_string(c.hidden);
  f.hyperparameters["residual"] = c.residual ? "true" : "false";
  add_params(f, m.params());
  return f;
}

ModelFile to_model_file(const EncDecModel& m, const Hyperparameters& extra) {
  ModelFile f = start_file(ModelKind::encdec, extra);
  f.vocabularies.push_back(m.source_vocab());
  f.vocabularies.push_back(m.target_vocab());
  const EncDecConfig& c = m.config();
  f.hyperparameters["cell"] = to_string(c.cell);
  f.hyperparameters["layers"] = std::to_string(c.layers);
  f.hyperparameters["embed"] = std::to_string(c.embed);
  f.hyperparameters["enc_hidden"] = std::to_string(c.enc_hidden);
  f.hyperparameters["dec_hidden"] = std::to_string(c.dec_hidden);
  f.hyperparameters["encoder"] = to_string(c.direction);
  f.hyperparameters["bridge"] = to_string(c.bridge);
  f.hyperparameters["attention"] = to_string(c.attention);
  f.hyperparameters["attention_hidden"] = std::to_string(c.attention_hidden);
  add_params(f, m.params());
  return f;
}

ModelFile to_model_file(const AnyModel& m, const Hyperparameters& extra) {
  return std::visit([&](const auto& model) { return to_model_file(model, extra); }, m);
}

AnyModel from_model_file(const ModelFile& f) {
  const Hyperparameters& h = f.hyperparameters;
  switch (f.kind) {
    case ModelKind::ngram: {
      expect_vocabularies(f, 1);
      const auto order = static_cast<unsigned>(require_uint(h, "order"));
      if (order == 0) throw DataError("n-gram order must be positive");
      NGramCountTable table(order);
      for (const auto& [key, c] : f.ngram_counts) {
        if (key.empty() || key.size() > order) throw DataError("n-gram entry longer than the model order");
        for (TokenId id : key) {
          if (id >= f.vocabularies[0].size()) throw DataError("n-gram entry outside the vocabulary");
        }
        table.add(key, c);
      }
      InterpolationWeights w{require_doubles(h, "alpha")};
      if (w.alpha.size() != order) throw DataError("alpha list does not match the n-gram order");
      return NGramModel(f.vocabularies[0], std::move(table), std::move(w));
    }
    case ModelKind::loglinear: {
      expect_vocabularies(f, 1);
      LogLinearParams p;
      p.weights = find_tensor(f, "W");
      p.bias = find_tensor(f, "b");
      try {
        return LogLinearLM(f.vocabularies[0], require(h, "features"), std::move(p));
      } catch (const ShapeError& e) {
        throw DataError(e.what());
      } catch (const ConfigError& e) {
        throw DataError(e.what());
      }
    }
    case ModelKind::ffnnlm: {
      expect_vocabularies(f, 1);
      FFNNLMConfig c;
      c.order = static_cast<unsigned>(require_uint(h, "order"));
      c.embed = require_uint(h, "embed");
      c.hidden = require_uint(h, "hidden");
      c.nonlinearity = parse_field(h, "nonlinearity", parse_nonlinearity);
      FFNNLM m(f.vocabularies[0], c);
      load_params(f, m.params());
      return m;
    }
    case ModelKind::rnnlm: {
      expect_vocabularies(f, 1);
      RnnLMConfig c;
      c.cell = parse_field(h, "cell", parse_cell_kind);
      c.layers = require_uint(h, "layers");
      c.embed = require_uint(h, "embed");
      c.hidden = require_uint(h, "hidden");
      c.residual = require_bool(h, "residual");
      RnnLM m(f.vocabularies[0], c);
      load_params(f, m.params());
      return m;
    }
    case ModelKind::encdec: {
      expect_vocabularies(f, 2);
      EncDecConfig c;
      c.cell = parse_field(h, "cell", parse_cell_kind);
      c.layers = require_uint(h, "layers");
      c.embed = require_uint(h, "embed");
      c.enc_hidden = require_uint(h, "enc_hidden");
      c.dec_hidden = require_uint(h, "dec_hidden");
      c.direction = parse_field(h, "encoder", parse_encoder_direction);
      c.bridge = parse_field(h, "bridge", parse_bridge_kind);
      c.attention = parse_field(h, "attention", parse_attention_kind);
      c.attention_hidden = require_uint(h, "attention_hidden");
      EncDecModel m(f.vocabularies[0], f.vocabularies[1], c);
      load_params(f, m.params());
      return m;
    }
  }
  throw DataError("unknown model kind");
}

void save_model_file(const std::string& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path);
  write_model_file(out, file);
  out.close();
  if (!out) throw DataError("cannot write model file " + path);
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  try {
    return from_model_file(read_model_file(in, path));
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw DataError(path + ": " + what);
  }
}

Hyperparameters describe(const OptimizerConfig& config) {
  Hyperparameters h;
  h["optimizer"] = std::string(to_string(config.kind));
  h["learning_rate"] = format_double(config.learning_rate);
  switch (config.kind) {
    case OptimizerKind::momentum:
      h["momentum"] = format_double(config.momentum);
      break;
    case OptimizerKind::adam:
      h["adam_beta1"] = format_double(config.beta1);
      h["adam_beta2"] = format_double(config.beta2);
      h["adam_epsilon"] = format_double(config.epsilon);
      break;
    case OptimizerKind::adagrad:
      h["adagrad_epsilon"] = format_double(config.epsilon);
      break;
    case OptimizerKind::sgd:
      break;
  }
  return h;
}

}  // namespace s2sw
