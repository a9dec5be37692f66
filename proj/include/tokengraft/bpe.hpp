#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tokengraft/vocabulary.hpp"

namespace tokengraft {

namespace byte_level {

// GPT-2 byte -> printable codepoint table.
const std::array<char32_t, 256>& byte_to_codepoint();

// Raw bytes to the printable alphabet used for vocabulary strings.
std::string encode_bytes(std::string_view raw);

// Inverse of encode_bytes; nullopt if `mapped` has a scalar outside the table.
std::optional<std::string> decode_bytes(std::string_view mapped);

}  // namespace byte_level

// Splits `text` into whitespace-led words: each piece is a (possibly empty)
// whitespace run followed by a non-whitespace run. Trailing whitespace forms
// its own piece. Concatenating the pieces gives back `text`.
std::vector<std::string_view> split_whitespace_words(std::string_view text);

class PreTokenizer {
 public:
  enum class Kind { kWhitespace, kSeparator };

  // Word-bounded: pieces per split_whitespace_words.
  static PreTokenizer whitespace() { return PreTokenizer{}; }
  // Supertoken mode: split on `separator` (removed); each remaining segment
  // is one piece, so merges may cross whitespace but never the separator.
  static PreTokenizer separator(std::string separator);

  Kind kind() const noexcept { return kind_; }
  const std::string& separator_string() const noexcept { return separator_; }

  std::vector<std::string_view> split(std::string_view text) const;

  bool operator==(const PreTokenizer&) const = default;

 private:
  Kind kind_ = Kind::kWhitespace;
  std::string separator_;
};

struct MergeRule {
  std::string left;
  std::string right;
  std::uint32_t rank = 0;
};

// Byte-level BPE tokenizer. Immutable after construction; encode/decode are
// safe to call concurrently.
class BpeTokenizer {
 public:
  using MergePair = std::pair<std::string, std::string>;

  // `merges` are in rank order and use vocabulary (byte-level) strings.
  // Throws FormatError when a merge or token is inconsistent with `vocab`.
  BpeTokenizer(Vocabulary vocab, const std::vector<MergePair>& merges,
               PreTokenizer pre_tokenizer = PreTokenizer::whitespace());

  // Builds specials + the 256 byte symbols + one token per merge result.
  // Merge strings are given in the byte-level alphabet.
  static BpeTokenizer from_merges(const std::vector<std::string>& specials,
                                  const std::vector<MergePair>& merges,
                                  PreTokenizer pre_tokenizer = PreTokenizer::whitespace());

  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;
  // Raw bytes of one token (specials decode to their literal text).
  const std::string& decode_token(TokenId id) const;

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }
  const PreTokenizer& pre_tokenizer() const noexcept { return pre_tokenizer_; }
  std::size_t size() const noexcept { return vocab_.size(); }

  // True when all 256 byte symbols are present, i.e. encode is lossless.
  bool byte_complete() const noexcept;

  std::string to_json() const;
  static BpeTokenizer from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static BpeTokenizer load(const std::filesystem::path& path);

 private:
  struct MergeTarget {
    std::uint32_t rank;
    TokenId merged;
  };

  void encode_piece(std::string_view piece, std::vector<TokenId>& out) const;
  std::optional<MergeTarget> lookup_merge(TokenId left, TokenId right) const;

  Vocabulary vocab_;
  std::vector<MergeRule> merges_;
  PreTokenizer pre_tokenizer_;
  std::unordered_map<std::uint64_t, MergeTarget> merge_index_;
  std::array<std::optional<TokenId>, 256> byte_ids_{};
  std::vector<std::string> token_bytes_;
  std::vector<std::string> specials_by_length_;
};

// Trains a byte-level BPE tokenizer. Ids: specials first, then the 256 byte
// symbols, then merge results in merge order. The most frequent adjacent
// pair is merged first; ties go to the lexicographically smallest
// (left, right). Throws ConfigError if vocab_size < 256 + specials and
// InputError if the corpus has no non-empty text.
BpeTokenizer train_bpe(std::span<const std::string> corpus,
                       std::size_t vocab_size,
                       const std::vector<std::string>& specials = {},
                       PreTokenizer pre_tokenizer = PreTokenizer::whitespace());

}  // namespace tokengraft
