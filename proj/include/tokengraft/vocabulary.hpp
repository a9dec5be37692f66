#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokengraft {

using TokenId = std::uint32_t;

// Transparent hashing so lookups by string_view don't allocate.
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

// Ordered token strings with the inverse index. Ids are positions in
// `entries()`. Specials are stored raw; every other token is stored in
// whatever alphabet its tokenizer uses (byte-level for BPE).
class Vocabulary {
 public:
  Vocabulary() = default;

  // Throws FormatError on duplicate entries or specials missing from entries.
  explicit Vocabulary(std::vector<std::string> entries,
                      std::set<std::string> specials = {});

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  bool is_special(TokenId id) const;
  bool is_special(std::string_view token) const;

  const std::vector<std::string>& entries() const noexcept { return entries_; }
  const std::set<std::string, std::less<>>& specials() const noexcept {
    return specials_;
  }

  // Appends a token and returns its id. Throws FormatError on duplicates.
  TokenId push_back(std::string token);

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> index_;
  std::set<std::string, std::less<>> specials_;
};

struct VocabPartition {
  std::set<std::string> shared;
  std::set<std::string> unique;
};

// Exact byte-string comparison; no normalization of whitespace markers.
VocabPartition partition_vocab(const Vocabulary& old_vocab,
                               const Vocabulary& new_vocab);

}  // namespace tokengraft
