#include "tokengraft/supertoken.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "tokengraft/error.hpp"
#include "tokengraft/parallel.hpp"
#include "tokengraft/unicode.hpp"

namespace tokengraft {

ChunkLengthDistribution::ChunkLengthDistribution(std::vector<std::uint32_t> support,
                                                 std::vector<double> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
  if (support_.empty()) throw ConfigError("chunk length distribution is empty");
  if (support_.size() != probs_.size()) {
    throw ConfigError("chunk length distribution: support and probs differ in length");
  }
  std::set<std::uint32_t> distinct;
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == 0) throw ConfigError("chunk lengths must be positive");
    if (!distinct.insert(support_[i]).second) {
      throw ConfigError("duplicate chunk length " + std::to_string(support_[i]));
    }
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw ConfigError("chunk length probabilities must be non-negative");
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("chunk length probabilities sum to " + std::to_string(total) +
                      ", expected 1");
  }
}

ChunkLengthDistribution ChunkLengthDistribution::parse(std::string_view spec) {
  std::vector<std::uint32_t> support;
  std::vector<double> probs;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find(',', start);
    if (end == std::string_view::npos) end = spec.size();
    const auto item = spec.substr(start, end - start);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("chunk distribution entry '" + std::string(item) +
                        "' is not of the form length:probability");
    }
    std::uint32_t len = 0;
    const auto len_str = item.substr(0, colon);
    auto [p, ec] = std::from_chars(len_str.data(), len_str.data() + len_str.size(), len);
    if (ec != std::errc{} || p != len_str.data() + len_str.size()) {
      throw ConfigError("bad chunk length '" + std::string(len_str) + "'");
    }
    double prob = 0.0;
    try {
      std::size_t used = 0;
      const std::string prob_str(item.substr(colon + 1));
      prob = std::stod(prob_str, &used);
      if (used != prob_str.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("bad chunk probability in '" + std::string(item) + "'");
    }
    support.push_back(len);
    probs.push_back(prob);
    start = end + 1;
  }
  return ChunkLengthDistribution(std::move(support), std::move(probs));
}

ChunkLengthDistribution ChunkLengthDistribution::default_words() {
  return ChunkLengthDistribution({1, 2, 3, 4}, {0.4, 0.3, 0.2, 0.1});
}

std::uint32_t ChunkLengthDistribution::sample(std::mt19937_64& rng) const {
  const double u = std::generate_canonical<double, 53>(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    cumulative += probs_[i];
    if (u < cumulative) return support_[i];
  }
  // Rounding left u above the accumulated mass; take the last supported length.
  for (std::size_t i = support_.size(); i-- > 0;) {
    if (probs_[i] > 0.0) return support_[i];
  }
  return support_.back();
}

std::string ChunkLengthDistribution::to_string() const {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (i) out << ',';
    out << support_[i] << ':' << probs_[i];
  }
  return out.str();
}

std::vector<std::uint32_t> generate_chunk_lengths(std::uint32_t word_count,
                                                  const ChunkLengthDistribution& dist,
                                                  std::mt19937_64& rng) {
  if (word_count == 0) throw ConfigError("word count must be at least 1");
  std::vector<std::uint32_t> lengths;
  std::uint32_t remaining = word_count;
  while (remaining > 0) {
    const auto len = std::min(dist.sample(rng), remaining);
    lengths.push_back(len);
    remaining -= len;
  }
  return lengths;
}

std::mt19937_64 document_rng(std::uint64_t seed, std::uint64_t doc_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(doc_index),
                    static_cast<std::uint32_t>(doc_index >> 32)};
  return std::mt19937_64(seq);
}

namespace {

std::string strip_all(std::string_view text, std::string_view needle) {
  std::string out;
  out.reserve(text.size());
  std::size_t start = 0;
  while (true) {
    const auto hit = text.find(needle, start);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(start, hit - start));
    start = hit + needle.size();
  }
  out.append(text.substr(start));
  return out;
}

bool all_whitespace(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = unicode::next_codepoint(s, pos);
    if (!unicode::is_whitespace(d.value)) return false;
    pos += d.length;
  }
  return true;
}

}  // namespace

std::string augment_document(std::string_view text, const SupertokenConfig& cfg,
                             std::mt19937_64& rng) {
  if (cfg.separator.empty()) throw ConfigError("separator must be non-empty");
  const std::string clean = strip_all(text, cfg.separator);
  if (clean.empty()) return clean;

  std::string out;
  out.reserve(clean.size() + 16);
  if (cfg.unit == ChunkUnit::kChars) {
    const auto offsets = unicode::codepoint_offsets(clean);
    const auto n = static_cast<std::uint32_t>(offsets.size() - 1);
    std::size_t pos = 0;
    const auto lengths = generate_chunk_lengths(n, cfg.dist, rng);
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (i) out += cfg.separator;
      const auto begin = offsets[pos];
      pos += lengths[i];
      out.append(clean, begin, offsets[pos] - begin);
    }
    return out;
  }

  auto pieces = split_whitespace_words(clean);
  std::string_view trailing;
  if (!pieces.empty() && all_whitespace(pieces.back())) {
    trailing = pieces.back();
    pieces.pop_back();
  }
  if (pieces.empty()) return clean;

  const auto lengths = generate_chunk_lengths(static_cast<std::uint32_t>(pieces.size()),
                                              cfg.dist, rng);
  std::size_t next = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i) out += cfg.separator;
    for (std::uint32_t w = 0; w < lengths[i]; ++w) out.append(pieces[next++]);
  }
  // Trailing whitespace is its own segment, matching the word pre-tokenizer.
  if (!trailing.empty()) {
    out += cfg.separator;
    out.append(trailing);
  }
  return out;
}

std::vector<std::string> augment_corpus(std::span<const std::string> corpus,
                                        const SupertokenConfig& cfg) {
  std::vector<std::string> out(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    auto rng = document_rng(cfg.seed, i);
    out[i] = augment_document(corpus[i], cfg, rng);
  });
  return out;
}

BpeTokenizer train_supertokenizer(std::span<const std::string> corpus,
                                  const SupertokenConfig& cfg) {
  const auto augmented = augment_corpus(corpus, cfg);
  return train_bpe(augmented, cfg.vocab_size, cfg.specials,
                   PreTokenizer::separator(cfg.separator));
}

}  // namespace tokengraft
