#include <gtest/gtest.h>

#include <cstdio>

#include "test_support.hpp"
#include "tokengraft/compression.hpp"
#include "tokengraft/corpus.hpp"
#include "tokengraft/error.hpp"
#include "tokengraft/supertoken.hpp"

namespace tokengraft {
namespace {

std::string three_dp(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

TEST(CompressionStats, BytesPerTokenArithmetic) {
  auto s = make_compression_stats(203, 32);
  EXPECT_EQ(three_dp(s.bytes_per_token), "6.344");
  EXPECT_DOUBLE_EQ(s.bytes_per_token, 203.0 / 32.0);
  EXPECT_EQ(make_compression_stats(10, 0).bytes_per_token, 0.0);
}

TEST(EvalCompression, Segmented203BytesInto32Tokens) {
  auto [text, tok] = testing::text_203_bytes_32_tokens();
  ASSERT_EQ(text.size(), 203u);
  std::vector<std::string> corpus = {text};
  auto s = eval_compression(tok, corpus);
  EXPECT_EQ(s.total_tokens, 32u);
  EXPECT_EQ(s.corpus_bytes, 203u);
  EXPECT_EQ(three_dp(s.bytes_per_token), "6.344");
  EXPECT_EQ(s.unique_token_types_used, 2u);
}

TEST(EvalCompression, SingleTokenAndByteVocab) {
  auto tok = BpeTokenizer::from_merges({}, testing::chained_merges("hello"));
  std::vector<std::string> one = {"hello"};
  auto s = eval_compression(tok, one);
  EXPECT_EQ(s.total_tokens, 1u);
  EXPECT_DOUBLE_EQ(s.bytes_per_token, 5.0);

  auto bytes_only = BpeTokenizer::from_merges({}, {});
  auto corpus = testing::sample_corpus();
  auto b = eval_compression(bytes_only, corpus);
  EXPECT_EQ(b.total_tokens, b.corpus_bytes);
  EXPECT_DOUBLE_EQ(b.bytes_per_token, 1.0);
  std::vector<std::string> empty;
  EXPECT_THROW(eval_compression(bytes_only, empty), InputError);
}

TEST(EvalCompression, IndependentOfBatching) {
  auto corpus = testing::sample_corpus();
  auto tok = train_bpe(corpus, 400);
  auto whole = eval_compression(tok, corpus);
  std::uint64_t tokens = 0, bytes = 0;
  for (const auto& d : corpus) {
    std::vector<std::string> one = {d};
    auto s = eval_compression(tok, one);
    tokens += s.total_tokens;
    bytes += s.corpus_bytes;
  }
  EXPECT_EQ(whole.total_tokens, tokens);
  EXPECT_EQ(whole.corpus_bytes, bytes);
}

TEST(CountWords, Definition) {
  EXPECT_EQ(count_words("hello world"), 2u);
  EXPECT_EQ(count_words(" the"), 1u);
  EXPECT_EQ(count_words("  "), 0u);
  EXPECT_EQ(count_words(""), 0u);
  EXPECT_EQ(count_words("a\xC2\xA0" "b\n c "), 3u);
}

TEST(WordCountHistogram, BinsUniqueTypes) {
  auto merges = testing::chained_merges("hello world");
  // Whitespace pre-tokenizer never produces multi-word tokens; use a
  // separator tokenizer so the space-crossing merges apply.
  std::vector<BpeTokenizer::MergePair> mapped;
  for (const auto& [l, r] : merges) {
    mapped.push_back({byte_level::encode_bytes(l), byte_level::encode_bytes(r)});
  }
  auto super = BpeTokenizer::from_merges({}, mapped, PreTokenizer::separator("|"));
  std::vector<std::string> corpus = {"hello world|hello world|x", " "};
  auto hist = word_count_histogram(super, corpus);
  EXPECT_EQ(hist, (WordCountHistogram{{0, 1}, {1, 1}, {2, 1}}));
  auto occ = word_count_histogram(super, corpus, true);
  EXPECT_EQ(occ, (WordCountHistogram{{0, 1}, {1, 1}, {2, 2}}));
  std::uint64_t total = 0;
  for (auto [_, n] : hist) total += n;
  std::vector<std::string> all(corpus.begin(), corpus.end());
  EXPECT_EQ(total, eval_compression(super, all).unique_token_types_used);
}

TEST(WordCountHistogram, SupertokensReachHigherBins) {
  std::vector<std::string> corpus(300, "the cat sat on the mat with joy");
  SupertokenConfig cfg;
  cfg.vocab_size = 320;
  auto super = train_supertokenizer(corpus, cfg);
  auto plain = train_bpe(corpus, 320);
  auto hs = word_count_histogram(super, corpus);
  auto hp = word_count_histogram(plain, corpus);
  EXPECT_GT(hs.rbegin()->first, 1u);
  EXPECT_LE(hp.rbegin()->first, 1u);
}

TEST(Comparison, TableAndCsv) {
  auto corpus = testing::sample_corpus();
  auto a = BpeTokenizer::from_merges({}, {});
  auto b = train_bpe(corpus, 400);
  std::vector<NamedTokenizer> toks = {{"bytes", &a}, {"bpe", &b}};
  std::vector<NamedCorpus> corpora = {{"all", corpus}, {"first", {corpus[0]}}};
  auto cells = compare_tokenizers(toks, corpora);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].tokenizer, "bytes");
  EXPECT_EQ(cells[1].corpus, "first");
  EXPECT_EQ(cells[2].tokenizer, "bpe");
  auto csv = format_comparison_csv(cells);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tokenizer,corpus,total_tokens,corpus_bytes,bytes_per_token");
  EXPECT_NE(csv.find("bytes,first,43,43,1.000"), std::string::npos) << csv;
  auto table = format_comparison_table(cells);
  EXPECT_NE(table.find("bytes"), std::string::npos);
  EXPECT_NE(table.find("first"), std::string::npos);
}

TEST(Corpus, LinesAndJsonl) {
  EXPECT_EQ(parse_corpus("a\nb\r\n\nc", CorpusFormat::kLines),
            (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_EQ(parse_corpus("{\"text\":\"x y\"}\n\n{\"text\":\"\\u00e9\",\"id\":3}\n", CorpusFormat::kJsonl),
            (std::vector<std::string>{"x y", "\xC3\xA9"}));
  try {
    parse_corpus("{\"text\":\"ok\"}\n{\"txt\":1}\n", CorpusFormat::kJsonl);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_corpus("{bad\n", CorpusFormat::kJsonl), FormatError);
  EXPECT_EQ(parse_corpus_format("jsonl"), CorpusFormat::kJsonl);
  EXPECT_THROW(parse_corpus_format("csv"), ConfigError);
}

}  // namespace
}  // namespace tokengraft
