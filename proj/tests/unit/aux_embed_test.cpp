#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "test_support.hpp"
#include "tokengraft/aux_embed.hpp"
#include "tokengraft/error.hpp"

namespace tokengraft {
namespace {

double norm(std::span<const float> v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  return std::sqrt(s);
}

std::string auxv1(std::uint32_t dim, const std::vector<std::pair<std::string, std::vector<float>>>& recs,
                  std::uint64_t declared = UINT64_MAX) {
  std::string out("AUXV1\0", 6);
  auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  put(&dim, 4);
  std::uint64_t count = declared == UINT64_MAX ? recs.size() : declared;
  put(&count, 8);
  for (const auto& [k, v] : recs) {
    auto len = static_cast<std::uint32_t>(k.size());
    put(&len, 4);
    out += k;
    put(v.data(), v.size() * 4);
  }
  return out;
}

TEST(AuxStore, EmbedNormalizesAndLooksUpExactly) {
  AuxEmbeddingStore s(2);
  std::vector<float> v = {2.0f, 0.0f};
  EXPECT_TRUE(s.insert("cat", v));
  auto e = s.embed("cat");
  ASSERT_TRUE(e.has_value());
  EXPECT_FLOAT_EQ((*e)[0], 1.0f);
  EXPECT_NEAR(norm(*e), 1.0, 1e-6);
  EXPECT_FALSE(s.embed("Cat").has_value());
  EXPECT_FALSE(s.embed("dog").has_value());
}

TEST(AuxStore, InsertErrors) {
  AuxEmbeddingStore s(3);
  std::vector<float> two = {1, 2};
  std::vector<float> zero = {0, 0, 0};
  std::vector<float> nan = {1, NAN, 0};
  EXPECT_THROW(s.insert("a", two), InputError);
  EXPECT_THROW(s.insert("a", zero), InputError);
  EXPECT_THROW(s.insert("a", nan), InputError);
  EXPECT_THROW(AuxEmbeddingStore(0), InputError);
}

TEST(AuxStore, LoadRenormalizesAndCountsDuplicates) {
  auto bytes = auxv1(2, {{"x", {3, 4}}, {"y", {0, 2}}, {"x", {0, -5}}});
  auto s = AuxEmbeddingStore::from_bytes(bytes);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.duplicate_count(), 1u);
  auto x = *s.embed("x");
  EXPECT_FLOAT_EQ(x[0], 0.0f);
  EXPECT_FLOAT_EQ(x[1], -1.0f);
  EXPECT_NEAR(norm(*s.embed("y")), 1.0, 1e-6);
}

TEST(AuxStore, RoundTripThroughFile) {
  testing::TempDir dir;
  AuxEmbeddingStore s(3);
  std::vector<float> a = {1, 2, 3}, b = {-1, 0.5f, 0};
  s.insert("\xE0\xA4\xA8", a);
  s.insert("b", b);
  s.save(dir / "s.auxv1");
  auto back = AuxEmbeddingStore::load(dir / "s.auxv1");
  EXPECT_EQ(back.keys(), s.keys());
  EXPECT_EQ(back.to_bytes(), s.to_bytes());
  auto x = *back.embed("b"), y = *s.embed("b");
  EXPECT_EQ(std::memcmp(x.data(), y.data(), 12), 0);
}

TEST(AuxStore, LoadErrors) {
  auto good = auxv1(2, {{"k", {1, 0}}});
  EXPECT_NO_THROW(AuxEmbeddingStore::from_bytes(good));
  auto bad_magic = good;
  bad_magic[0] = 'B';
  EXPECT_THROW(AuxEmbeddingStore::from_bytes(bad_magic), FormatError);
  EXPECT_THROW(AuxEmbeddingStore::from_bytes(auxv1(0, {})), FormatError);
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    EXPECT_THROW(AuxEmbeddingStore::from_bytes(good.substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(AuxEmbeddingStore::from_bytes(auxv1(2, {{"k", {1, 0}}}, 2)), FormatError);
  EXPECT_THROW(AuxEmbeddingStore::from_bytes(good + "x"), FormatError);
  EXPECT_THROW(AuxEmbeddingStore::from_bytes(auxv1(2, {{"\xFF", {1, 0}}})), FormatError);
  // Record vectors sized for a different dim misalign the stream.
  EXPECT_THROW(AuxEmbeddingStore::from_bytes(auxv1(3, {{"k", {1, 0}}})), FormatError);
  testing::TempDir dir;
  EXPECT_THROW(AuxEmbeddingStore::load(dir / "none.auxv1"), Error);
}

TEST(PseudoEmbedding, DeterministicUnitAndDistinct) {
  auto a = pseudo_embedding("hello", 16);
  EXPECT_EQ(a, pseudo_embedding("hello", 16));
  EXPECT_NEAR(norm(a), 1.0, 1e-6);
  EXPECT_NE(a, pseudo_embedding("hellp", 16));
  auto tok = BpeTokenizer::from_merges({}, {{"a", "b"}});
  auto store = make_pseudo_store(tok, 8);
  // Lone bytes >= 0x80 are not valid UTF-8 keys and are skipped.
  EXPECT_EQ(store.size(), 128u + 1u);
  EXPECT_TRUE(store.embed("ab").has_value());
  EXPECT_FALSE(store.embed("\xFF").has_value());
}

KnnIndex index_of(const std::vector<std::vector<float>>& rows) {
  std::vector<TokenId> keys;
  std::vector<float> flat;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    keys.push_back(static_cast<TokenId>(i));
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return KnnIndex(keys, flat, static_cast<std::uint32_t>(rows[0].size()));
}

TEST(KnnIndex, SelfSimilarity) {
  auto idx = index_of({{0.6f, 0.8f}});
  std::vector<float> q = {0.6f, 0.8f};
  auto r = idx.query(q, 3);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, 0u);
  EXPECT_NEAR(r[0].similarity, 1.0, 1e-7);
}

TEST(KnnIndex, TopTwoOfFour) {
  auto idx = index_of({{1, 0}, {0, 1}, {-1, 0}, {0.6f, 0.8f}});
  std::vector<float> q = {0.8f, 0.6f};
  // Dots: 0.8, 0.6, -0.8, 0.96.
  auto r = idx.query(q, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, 3u);
  EXPECT_EQ(r[1].id, 0u);
  EXPECT_NEAR(r[0].similarity, 0.96, 1e-6);
  EXPECT_NEAR(r[1].similarity, 0.8, 1e-6);
}

TEST(KnnIndex, OrthogonalQueryTiesByTokenId) {
  auto idx = index_of({{0, 1, 0}, {0, 0, 1}, {0, 0.6f, 0.8f}});
  std::vector<float> q = {1, 0, 0};
  auto r = idx.query(q, 3);
  ASSERT_EQ(r.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r[i].id, i);
    EXPECT_EQ(r[i].similarity, 0.0);
  }
}

TEST(KnnIndex, QueryErrors) {
  auto idx = index_of({{1, 0}});
  std::vector<float> q = {1, 0};
  std::vector<float> bad_dim = {1, 0, 0};
  std::vector<float> not_unit = {1.1f, 0};
  std::vector<float> nearly_unit = {1.00005f, 0};
  EXPECT_THROW(idx.query(q, 0), ConfigError);
  EXPECT_THROW(idx.query(bad_dim, 1), InputError);
  EXPECT_THROW(idx.query(not_unit, 1), InputError);
  EXPECT_NO_THROW(idx.query(nearly_unit, 1));
}

TEST(KnnIndex, BuildCoversOnlyTokensWithVectors) {
  auto tok = BpeTokenizer::from_merges({}, {{"a", "b"}});
  AuxEmbeddingStore store(2);
  std::vector<float> v1 = {1, 0}, v2 = {0, 1};
  store.insert("ab", v1);
  store.insert("a", v2);
  store.insert("not-a-token", v1);
  IndexReport report;
  auto idx = KnnIndex::build(store, tok, &report);
  EXPECT_EQ(idx.size(), 2u);
  EXPECT_EQ(report.covered, 2u);
  EXPECT_EQ(report.missing.size(), tok.size() - 2);
  EXPECT_EQ(idx.keys(), (std::vector<TokenId>{*tok.vocab().find("a"), *tok.vocab().find("ab")}));
  AuxEmbeddingStore empty(2);
  EXPECT_THROW(KnnIndex::build(empty, tok), InputError);
}

TEST(KnnIndex, MatchesFullSortOracleAndIsSymmetric) {
  std::mt19937_64 rng(123);
  std::normal_distribution<float> g;
  const std::uint32_t dim = 16;
  std::vector<std::vector<float>> rows(300, std::vector<float>(dim));
  for (auto& r : rows) {
    for (auto& x : r) x = g(rng);
    double n = norm(r);
    for (auto& x : r) x = static_cast<float>(x / n);
  }
  // Duplicate rows to force exact similarity ties.
  rows[17] = rows[5];
  rows[250] = rows[5];
  auto idx = index_of(rows);
  for (int q = 0; q < 50; ++q) {
    const auto& query = rows[(q * 37) % rows.size()];
    std::vector<std::pair<double, TokenId>> all;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double s = 0;
      for (std::uint32_t d = 0; d < dim; ++d) s += double(query[d]) * rows[i][d];
      all.push_back({-s, static_cast<TokenId>(i)});
    }
    std::sort(all.begin(), all.end());
    auto got = idx.query(query, 10);
    ASSERT_EQ(got.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(got[i].id, all[i].second);
      EXPECT_NEAR(got[i].similarity, -all[i].first, 1e-6);
    }
  }
  auto tie = idx.query(rows[5], 3);
  EXPECT_EQ(tie[0].id, 5u);
  EXPECT_EQ(tie[1].id, 17u);
  EXPECT_EQ(tie[2].id, 250u);
  for (int i = 0; i < 100; ++i) {
    const auto& a = rows[i], &b = rows[299 - i];
    EXPECT_NEAR(dot(a, b), dot(b, a), 1e-6);
  }
}

}  // namespace
}  // namespace tokengraft
