// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>

#include "s2sw/error.hpp"

namespace s2sw {

Vocabulary::Vocabulary(std::uint64_t v_all) : v_all_(UINT64_MAX) {
  add(kBosToken);
  add(kEosToken);
  add(kUnkToken);
  set_v_all(v_all);
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens, std::uint64_t v_all) {
  Vocabulary v(UINT64_MAX);
  for (const auto& t : tokens) v.add(t);
  v.set_v_all(v_all);
  return v;
}

TokenId Vocabulary::add(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  if (v_all_ <= tokens_.size()) {
    tokens_.pop_back();
    index_.erase(std::string(token));
    throw ConfigError("vocabulary would reach v_all (" + std::to_string(v_all_) + ")");
  }
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(token); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw ConfigError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

void Vocabulary::set_v_all(std::uint64_t v_all) {
  if (v_all <= tokens_.size()) {
    throw ConfigError("v_all (" + std::to_string(v_all) +
                      ") must exceed the vocabulary size (" + std::to_string(tokens_.size()) + ")");
  }
  v_all_ = v_all;
}

void validate_utf8(std::string_view text, std::size_t line_number) {
  const auto fail = [&] {
    throw DataError("invalid UTF-8 on line " + std::to_string(line_number));
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      fail();
    }
    if (i + extra >= text.size()) fail();
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) fail();
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail();
    i += extra + 1;
  }
}

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> read_lines(std::istream& in, std::string_view origin) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      validate_utf8(line, lines.size() + 1);
    } catch (const DataError& e) {
      throw DataError(std::string(origin) + ": " + e.what());
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_lines(in, path);
}

Vocabulary build_vocab(std::span<const std::string> lines, VocabPolicy policy,
                       std::uint64_t v_all) {
  if (lines.empty()) throw DataError("empty corpus");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::uint64_t> counts;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    validate_utf8(lines[n], n + 1);
    for (auto& tok : split_tokens(lines[n])) {
      auto [it, inserted] = counts.try_emplace(tok, 0);
      if (inserted) order.push_back(tok);
      ++it->second;
    }
  }
  std::uint64_t threshold = 1;
  switch (policy.kind) {
    case VocabPolicy::Kind::keep_all: threshold = 1; break;
    case VocabPolicy::Kind::replace_singletons: threshold = 2; break;
    case VocabPolicy::Kind::min_count: threshold = std::max<std::uint64_t>(1, policy.min_count); break;
  }
  Vocabulary vocab(UINT64_MAX);
  for (const auto& tok : order) {
    if (counts[tok] >= threshold) vocab.add(tok);
  }
  vocab.set_v_all(v_all);
  return vocab;
}

Sentence encode(const Vocabulary& vocab, std::string_view line, bool append_eos) {
  Sentence out;
  for (const auto& tok : split_tokens(line)) out.push_back(vocab.id(tok));
  if (append_eos) out.push_back(kEos);
  return out;
}

std::vector<Sentence> encode_all(const Vocabulary& vocab, std::span<const std::string> lines,
                                 bool append_eos) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(encode(vocab, l, append_eos));
  return out;
}

std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids) {
  if (!ids.empty() && ids.back() == kEos) ids = ids.first(ids.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

std::vector<MiniBatch> make_batches(std::span<const Sentence> sentences, std::size_t batch_size,
                                    bool sort_by_length) {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  if (sort_by_length) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sentences[a].size() < sentences[b].size();
    });
  }
  std::vector<MiniBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    MiniBatch b;
    b.batch_size = end - start;
    for (std::size_t k = start; k < end; ++k) {
      const auto& s = sentences[order[k]];
      if (s.empty() || s.back() != kEos) throw DataError("batched sentences must end in </s>");
      b.max_len = std::max(b.max_len, s.size());
      b.lengths.push_back(s.size());
      b.order.push_back(order[k]);
    }
    b.tokens.assign(b.max_len * b.batch_size, kEos);
    b.mask.assign(b.max_len * b.batch_size, 0.0);
    for (std::size_t j = 0; j < b.batch_size; ++j) {
      const auto& s = sentences[b.order[j]];
      for (std::size_t t = 0; t < s.size(); ++t) {
        b.tokens[t * b.batch_size + j] = s[t];
        b.mask[t * b.batch_size + j] = 1.0;
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace s2sw
