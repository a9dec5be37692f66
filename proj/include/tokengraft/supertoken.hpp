#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokengraft/bpe.hpp"

namespace tokengraft {

// Discrete distribution over chunk lengths.
class ChunkLengthDistribution {
 public:
  // Throws ConfigError unless support is non-empty, positive and distinct,
  // probs are non-negative and sum to 1 within 1e-9.
  ChunkLengthDistribution(std::vector<std::uint32_t> support, std::vector<double> probs);

  // "1:0.4,2:0.3,3:0.2,4:0.1"
  static ChunkLengthDistribution parse(std::string_view spec);
  static ChunkLengthDistribution default_words();

  const std::vector<std::uint32_t>& support() const noexcept { return support_; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  std::uint32_t sample(std::mt19937_64& rng) const;
  std::string to_string() const;

 private:
  std::vector<std::uint32_t> support_;
  std::vector<double> probs_;
};

enum class ChunkUnit { kWords, kChars };

// U+E000, a private-use codepoint.
inline const std::string kDefaultSeparator = "\xEE\x80\x80";

struct SupertokenConfig {
  ChunkLengthDistribution dist = ChunkLengthDistribution::default_words();
  std::string separator = kDefaultSeparator;
  std::size_t vocab_size = 0;
  std::vector<std::string> specials;
  std::uint64_t seed = 0;
  ChunkUnit unit = ChunkUnit::kWords;
};

// Lengths summing to exactly word_count; the last one is clamped to the
// remainder. Throws ConfigError when word_count is zero.
std::vector<std::uint32_t> generate_chunk_lengths(std::uint32_t word_count,
                                                  const ChunkLengthDistribution& dist,
                                                  std::mt19937_64& rng);

// The per-document generator: a pure function of (seed, doc_index).
std::mt19937_64 document_rng(std::uint64_t seed, std::uint64_t doc_index);

// Strips separators from `text`, groups its whitespace-led words (or
// codepoints, in char mode) into chunks, and joins chunks with the separator.
// Whitespace between chunks stays at the head of the following chunk.
std::string augment_document(std::string_view text, const SupertokenConfig& cfg,
                             std::mt19937_64& rng);

// Augments every document (in parallel, with per-document generators).
std::vector<std::string> augment_corpus(std::span<const std::string> corpus,
                                        const SupertokenConfig& cfg);

// BPE over augmented documents with a separator-splitting pre-tokenizer. The
// returned tokenizer keeps that pre-tokenizer, so encoding plain text treats
// each separator-free span as a single piece.
BpeTokenizer train_supertokenizer(std::span<const std::string> corpus,
                                  const SupertokenConfig& cfg);

}  // namespace tokengraft
