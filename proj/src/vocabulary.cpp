#include "tokengraft/vocabulary.hpp"

#include "tokengraft/error.hpp"

namespace tokengraft {

Vocabulary::Vocabulary(std::vector<std::string> entries,
                       std::set<std::string> specials) {
  entries_.reserve(entries.size());
  index_.reserve(entries.size());
  for (auto& e : entries) push_back(std::move(e));
  for (const auto& s : specials) {
    if (!index_.contains(s)) {
      throw FormatError("special token '" + s + "' is not in the vocabulary");
    }
    specials_.insert(s);
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= entries_.size()) {
    throw FormatError("token id " + std::to_string(id) +
                      " out of range for vocabulary of size " +
                      std::to_string(entries_.size()));
  }
  return entries_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_special(TokenId id) const {
  return id < entries_.size() && specials_.contains(entries_[id]);
}

bool Vocabulary::is_special(std::string_view token) const {
  return specials_.contains(token);
}

TokenId Vocabulary::push_back(std::string token) {
  const auto id = static_cast<TokenId>(entries_.size());
  auto [it, inserted] = index_.emplace(token, id);
  if (!inserted) {
    throw FormatError("duplicate vocabulary entry '" + token + "'");
  }
  entries_.push_back(std::move(token));
  return id;
}

VocabPartition partition_vocab(const Vocabulary& old_vocab,
                               const Vocabulary& new_vocab) {
  VocabPartition p;
  for (const auto& t : new_vocab.entries()) {
    (old_vocab.contains(t) ? p.shared : p.unique).insert(t);
  }
  return p;
}

}  // namespace tokengraft
