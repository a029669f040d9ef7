// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Vocabularies, sentence encoding and padded minibatches.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace s2sw {

using TokenId = std::uint32_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;

inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";

inline constexpr std::uint64_t kDefaultVocabAll = 10'000'000;

/// Which training tokens receive their own id.
struct VocabPolicy {
  enum class Kind { keep_all, replace_singletons, min_count };
  Kind kind = Kind::keep_all;
  std::uint64_t min_count = 1;  // only read for Kind::min_count

  static VocabPolicy keep_all() { return {Kind::keep_all, 1}; }
  static VocabPolicy replace_singletons() { return {Kind::replace_singletons, 2}; }
  static VocabPolicy at_least(std::uint64_t k) { return {Kind::min_count, k}; }
};

/// Bidirectional token <-> id map. Ids 0, 1, 2 are always <s>, </s>, <unk>.
class Vocabulary {
 public:
  explicit Vocabulary(std::uint64_t v_all = kDefaultVocabAll);

  /// Builds from an explicit token list (reserved tokens are skipped if present).
  static Vocabulary from_tokens(std::span<const std::string> tokens,
                                std::uint64_t v_all = kDefaultVocabAll);

  /// Returns the existing id when the token is already present.
  TokenId add(std::string_view token);

  TokenId id(std::string_view token) const;  // <unk> when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Size of the assumed full language vocabulary used by the uniform
  /// unknown-word distribution.
  std::uint64_t v_all() const { return v_all_; }
  void set_v_all(std::uint64_t v_all);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && v_all_ == other.v_all_;
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> index_;
  std::uint64_t v_all_;
};

using Sentence = std::vector<TokenId>;

/// Throws DataError naming the line if `text` is not valid UTF-8.
void validate_utf8(std::string_view text, std::size_t line_number);

/// Splits on ASCII whitespace.
std::vector<std::string> split_tokens(std::string_view line);

/// Reads every line of a UTF-8 text file (LF endings, a trailing CR is dropped).
std::vector<std::string> read_lines(const std::string& path);
std::vector<std::string> read_lines(std::istream& in, std::string_view origin);

/// Vocabulary in first-occurrence order over the corpus. Throws DataError on
/// an empty corpus or invalid UTF-8.
Vocabulary build_vocab(std::span<const std::string> lines, VocabPolicy policy,
                       std::uint64_t v_all = kDefaultVocabAll);

Sentence encode(const Vocabulary& vocab, std::string_view line, bool append_eos);
std::vector<Sentence> encode_all(const Vocabulary& vocab,
                                 std::span<const std::string> lines, bool append_eos);

/// Space-joined surface form; a terminal </s> is dropped.
std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids);

/// A (max_len x batch) grid of ids padded with </s>, plus its loss mask.
struct MiniBatch {
  std::size_t max_len = 0;
  std::size_t batch_size = 0;
  std::vector<TokenId> tokens;        // row-major, tokens[t * batch_size + j]
  std::vector<double> mask;           // same layout, 1 for counted positions
  std::vector<std::size_t> lengths;   // counted length (incl. </s>) per column
  std::vector<std::size_t> order;     // index of each column's sentence in the input

  TokenId token(std::size_t t, std::size_t j) const { return tokens[t * batch_size + j]; }
  double mask_at(std::size_t t, std::size_t j) const { return mask[t * batch_size + j]; }
};

/// Groups sentences into padded batches. Sentences must be </s>-terminated.
std::vector<MiniBatch> make_batches(std::span<const Sentence> sentences,
                                    std::size_t batch_size, bool sort_by_length);

}  // namespace s2sw
