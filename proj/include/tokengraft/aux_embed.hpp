#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokengraft/bpe.hpp"
#include "tokengraft/vocabulary.hpp"

namespace tokengraft {

// Auxiliary text-embedding vectors keyed by decoded token text. Every stored
// vector has unit L2 norm.
class AuxEmbeddingStore {
 public:
  explicit AuxEmbeddingStore(std::uint32_t dim);

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }

  // Normalizes and stores; replaces an existing key and returns false then.
  // Throws InputError on dimension mismatch or a zero/non-finite vector.
  bool insert(std::string key, std::span<const float> vector);

  // Exact-match lookup.
  std::optional<std::span<const float>> embed(std::string_view text) const;

  // Keys in lexicographic order.
  std::vector<std::string> keys() const;

  // Number of duplicate keys overwritten while loading.
  std::size_t duplicate_count() const noexcept { return duplicates_; }

  // AUXV1 binary format. Records are written in key order.
  static AuxEmbeddingStore load(const std::filesystem::path& path);
  static AuxEmbeddingStore from_bytes(std::string_view bytes);
  std::string to_bytes() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::uint32_t dim_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
  std::vector<std::string> row_keys_;
  std::vector<std::vector<float>> rows_;
  std::size_t duplicates_ = 0;
};

// Deterministic, non-semantic unit vector derived from a hash of `text`.
// For fixtures and tests only.
std::vector<float> pseudo_embedding(std::string_view text, std::uint32_t dim);

// A store with a pseudo-embedding for every decoded token of `tok`.
AuxEmbeddingStore make_pseudo_store(const BpeTokenizer& tok, std::uint32_t dim);

struct Neighbor {
  TokenId id;
  double similarity;
  bool operator==(const Neighbor&) const = default;
};

struct IndexReport {
  std::size_t covered = 0;
  std::vector<TokenId> missing;  // old-vocab ids with no auxiliary vector
};

// Exact cosine kNN over old-vocabulary tokens. Immutable once built.
class KnnIndex {
 public:
  KnnIndex(std::vector<TokenId> keys, std::vector<float> matrix, std::uint32_t dim);

  // Old-vocab tokens whose decoded text has an auxiliary vector, in id
  // order. Throws InputError if none do.
  static KnnIndex build(const AuxEmbeddingStore& store, const BpeTokenizer& old_tok,
                        IndexReport* report = nullptr);

  // Up to k results, similarity descending, ties by ascending id.
  // Throws ConfigError for k == 0, InputError for a wrong-length or
  // non-unit query.
  std::vector<Neighbor> query(std::span<const float> q, std::uint32_t k) const;

  std::size_t size() const noexcept { return keys_.size(); }
  std::uint32_t dim() const noexcept { return dim_; }
  const std::vector<TokenId>& keys() const noexcept { return keys_; }
  std::span<const float> row(std::size_t i) const {
    return {matrix_.data() + i * dim_, dim_};
  }

 private:
  std::vector<TokenId> keys_;
  std::vector<float> matrix_;
  std::uint32_t dim_;
};

// Dot product accumulated in double.
double dot(std::span<const float> a, std::span<const float> b);

}  // namespace tokengraft
