#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokengraft/bpe.hpp"

namespace tokengraft {

struct CompressionStats {
  std::uint64_t corpus_bytes = 0;
  std::uint64_t total_tokens = 0;
  double bytes_per_token = 0.0;  // 0 when total_tokens is 0
  std::uint64_t unique_token_types_used = 0;
};

CompressionStats make_compression_stats(std::uint64_t corpus_bytes, std::uint64_t total_tokens,
                                        std::uint64_t unique_types = 0);

// Throws InputError for an empty corpus (no documents).
CompressionStats eval_compression(const BpeTokenizer& tok, std::span<const std::string> corpus);

// Number of maximal non-whitespace runs in `text`.
std::size_t count_words(std::string_view text);

// word count -> number of token types (or occurrences) with that many words.
using WordCountHistogram = std::map<std::size_t, std::uint64_t>;

// Bins every distinct token id used when encoding `corpus` by the number of
// words in its decoded text. With `weight_by_occurrence`, each use counts.
WordCountHistogram word_count_histogram(const BpeTokenizer& tok,
                                        std::span<const std::string> corpus,
                                        bool weight_by_occurrence = false);

struct NamedTokenizer {
  std::string name;
  const BpeTokenizer* tokenizer;
};

struct NamedCorpus {
  std::string name;
  std::vector<std::string> documents;
};

struct ComparisonCell {
  std::string tokenizer;
  std::string corpus;
  CompressionStats stats;
};

// One cell per (tokenizer, corpus), tokenizer-major.
std::vector<ComparisonCell> compare_tokenizers(std::span<const NamedTokenizer> toks,
                                               std::span<const NamedCorpus> corpora);

// Aligned text table: one row per tokenizer, one total-tokens column per corpus.
std::string format_comparison_table(const std::vector<ComparisonCell>& cells);

// CSV with header tokenizer,corpus,total_tokens,corpus_bytes,bytes_per_token.
std::string format_comparison_csv(const std::vector<ComparisonCell>& cells);

}  // namespace tokengraft
