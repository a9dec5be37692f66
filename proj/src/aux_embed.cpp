#include "tokengraft/aux_embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "byte_io.hpp"
#include "json_util.hpp"
#include "tokengraft/error.hpp"
#include "tokengraft/unicode.hpp"

namespace tokengraft {

namespace {

constexpr std::string_view kMagic{"AUXV1\0", 6};

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

AuxEmbeddingStore::AuxEmbeddingStore(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw InputError("auxiliary embedding dimension must be positive");
}

bool AuxEmbeddingStore::insert(std::string key, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw InputError("auxiliary vector for '" + key + "' has dimension " +
                     std::to_string(vector.size()) + ", store dimension is " +
                     std::to_string(dim_));
  }
  const double norm = std::sqrt(dot(vector, vector));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InputError("auxiliary vector for '" + key + "' is zero or not finite");
  }
  std::vector<float> unit(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    unit[i] = static_cast<float>(static_cast<double>(vector[i]) / norm);
  }
  if (auto it = index_.find(key); it != index_.end()) {
    rows_[it->second] = std::move(unit);
    return false;
  }
  index_.emplace(key, rows_.size());
  row_keys_.push_back(std::move(key));
  rows_.push_back(std::move(unit));
  return true;
}

std::optional<std::span<const float>> AuxEmbeddingStore::embed(std::string_view text) const {
  auto it = index_.find(text);
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(rows_[it->second]);
}

std::vector<std::string> AuxEmbeddingStore::keys() const {
  std::vector<std::string> out = row_keys_;
  std::sort(out.begin(), out.end());
  return out;
}

AuxEmbeddingStore AuxEmbeddingStore::from_bytes(std::string_view bytes) {
  detail::ByteReader in(bytes, "AUXV1");
  if (in.bytes(kMagic.size()) != kMagic) throw FormatError("AUXV1: bad magic");
  const auto dim = in.get<std::uint32_t>();
  const auto count = in.get<std::uint64_t>();
  if (dim == 0) throw FormatError("AUXV1: dimension is zero");
  AuxEmbeddingStore store(dim);
  std::vector<float> vec(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto key_len = in.get<std::uint32_t>();
    std::string key(in.bytes(key_len));
    if (!unicode::is_valid_utf8(key)) {
      throw FormatError("AUXV1: record " + std::to_string(r) + " key is not valid UTF-8");
    }
    for (auto& v : vec) v = in.get<float>();
    try {
      if (!store.insert(std::move(key), vec)) ++store.duplicates_;
    } catch (const InputError& e) {
      throw FormatError("AUXV1: record " + std::to_string(r) + ": " + e.what());
    }
  }
  if (in.remaining() != 0) {
    throw FormatError("AUXV1: " + std::to_string(in.remaining()) +
                      " trailing bytes after the declared " + std::to_string(count) +
                      " records (dimension mismatch?)");
  }
  return store;
}

AuxEmbeddingStore AuxEmbeddingStore::load(const std::filesystem::path& path) {
  try {
    return from_bytes(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string AuxEmbeddingStore::to_bytes() const {
  std::string out(kMagic);
  detail::put_le<std::uint32_t>(out, dim_);
  detail::put_le<std::uint64_t>(out, rows_.size());
  for (const auto& key : keys()) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out += key;
    for (float v : rows_[index_.find(key)->second]) detail::put_le<float>(out, v);
  }
  return out;
}

void AuxEmbeddingStore::save(const std::filesystem::path& path) const {
  detail::write_file(path, to_bytes());
}

std::vector<float> pseudo_embedding(std::string_view text, std::uint32_t dim) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::mt19937_64 rng(h);
  std::normal_distribution<double> normal;
  std::vector<double> raw(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : raw) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] / norm);
  return out;
}

AuxEmbeddingStore make_pseudo_store(const BpeTokenizer& tok, std::uint32_t dim) {
  AuxEmbeddingStore store(dim);
  for (TokenId id = 0; id < tok.size(); ++id) {
    const auto& text = tok.decode_token(id);
    if (!unicode::is_valid_utf8(text)) continue;
    store.insert(text, pseudo_embedding(text, dim));
  }
  return store;
}

KnnIndex::KnnIndex(std::vector<TokenId> keys, std::vector<float> matrix, std::uint32_t dim)
    : keys_(std::move(keys)), matrix_(std::move(matrix)), dim_(dim) {
  if (dim_ == 0 || matrix_.size() != keys_.size() * dim_) {
    throw InvariantError("kNN index matrix does not match its keys");
  }
}

KnnIndex KnnIndex::build(const AuxEmbeddingStore& store, const BpeTokenizer& old_tok,
                         IndexReport* report) {
  std::vector<TokenId> keys;
  std::vector<float> matrix;
  IndexReport local;
  for (TokenId id = 0; id < old_tok.size(); ++id) {
    if (auto v = store.embed(old_tok.decode_token(id))) {
      keys.push_back(id);
      matrix.insert(matrix.end(), v->begin(), v->end());
    } else {
      local.missing.push_back(id);
    }
  }
  local.covered = keys.size();
  if (keys.empty()) {
    throw InputError("no old-vocabulary token has an auxiliary embedding; kNN index is empty");
  }
  if (report) *report = std::move(local);
  return KnnIndex(std::move(keys), std::move(matrix), store.dim());
}

std::vector<Neighbor> KnnIndex::query(std::span<const float> q, std::uint32_t k) const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (q.size() != dim_) {
    throw InputError("query has dimension " + std::to_string(q.size()) + ", index has " +
                     std::to_string(dim_));
  }
  if (std::abs(std::sqrt(dot(q, q)) - 1.0) > 1e-4) {
    throw InputError("kNN query vector is not unit-normalized");
  }
  std::vector<Neighbor> all(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) all[i] = {keys_[i], dot(q, row(i))};
  const auto take = std::min<std::size_t>(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.similarity != b.similarity ? a.similarity > b.similarity
                                                          : a.id < b.id;
                    });
  all.resize(take);
  return all;
}

}  // namespace tokengraft
