#include "tokengraft/compression.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "tokengraft/error.hpp"
#include "tokengraft/parallel.hpp"
#include "tokengraft/unicode.hpp"

namespace tokengraft {

CompressionStats make_compression_stats(std::uint64_t corpus_bytes, std::uint64_t total_tokens,
                                        std::uint64_t unique_types) {
  CompressionStats s;
  s.corpus_bytes = corpus_bytes;
  s.total_tokens = total_tokens;
  s.unique_token_types_used = unique_types;
  s.bytes_per_token =
      total_tokens ? static_cast<double>(corpus_bytes) / static_cast<double>(total_tokens) : 0.0;
  return s;
}

namespace {

std::vector<std::vector<TokenId>> encode_all(const BpeTokenizer& tok,
                                             std::span<const std::string> corpus) {
  std::vector<std::vector<TokenId>> out(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { out[i] = tok.encode(corpus[i]); });
  return out;
}

}  // namespace

CompressionStats eval_compression(const BpeTokenizer& tok, std::span<const std::string> corpus) {
  if (corpus.empty()) throw InputError("compression corpus is empty");
  const auto encoded = encode_all(tok, corpus);
  std::uint64_t bytes = 0;
  std::uint64_t tokens = 0;
  std::set<TokenId> types;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    bytes += corpus[i].size();
    tokens += encoded[i].size();
    types.insert(encoded[i].begin(), encoded[i].end());
  }
  return make_compression_stats(bytes, tokens, types.size());
}

std::size_t count_words(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = unicode::next_codepoint(text, pos);
    const bool ws = unicode::is_whitespace(d.value);
    if (!ws && !in_word) ++words;
    in_word = !ws;
    pos += d.length;
  }
  return words;
}

WordCountHistogram word_count_histogram(const BpeTokenizer& tok,
                                        std::span<const std::string> corpus,
                                        bool weight_by_occurrence) {
  std::map<TokenId, std::uint64_t> uses;
  for (const auto& ids : encode_all(tok, corpus)) {
    for (TokenId id : ids) ++uses[id];
  }
  WordCountHistogram hist;
  for (const auto& [id, n] : uses) {
    hist[count_words(tok.decode_token(id))] += weight_by_occurrence ? n : 1;
  }
  return hist;
}

std::vector<ComparisonCell> compare_tokenizers(std::span<const NamedTokenizer> toks,
                                               std::span<const NamedCorpus> corpora) {
  std::vector<ComparisonCell> cells;
  for (const auto& t : toks) {
    for (const auto& c : corpora) {
      cells.push_back({t.name, c.name, eval_compression(*t.tokenizer, c.documents)});
    }
  }
  return cells;
}

namespace {

std::string format_bpt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string format_comparison_table(const std::vector<ComparisonCell>& cells) {
  std::vector<std::string> tok_names;
  std::vector<std::string> corpus_names;
  std::map<std::pair<std::string, std::string>, const CompressionStats*> lookup;
  for (const auto& c : cells) {
    if (std::find(tok_names.begin(), tok_names.end(), c.tokenizer) == tok_names.end()) {
      tok_names.push_back(c.tokenizer);
    }
    if (std::find(corpus_names.begin(), corpus_names.end(), c.corpus) == corpus_names.end()) {
      corpus_names.push_back(c.corpus);
    }
    lookup[{c.tokenizer, c.corpus}] = &c.stats;
  }

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"tokenizer"};
  for (const auto& c : corpus_names) header.push_back(c);
  grid.push_back(header);
  for (const auto& t : tok_names) {
    std::vector<std::string> row{t};
    for (const auto& c : corpus_names) {
      auto it = lookup.find({t, c});
      row.push_back(it == lookup.end()
                        ? "-"
                        : std::to_string(it->second->total_tokens) + " (" +
                              format_bpt(it->second->bytes_per_token) + " B/tok)");
    }
    grid.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], unicode::codepoint_count(row[i]));
    }
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      const auto pad = width[i] - unicode::codepoint_count(grid[r][i]);
      if (i == 0) {
        out << grid[r][i] << std::string(pad, ' ');
      } else {
        out << "  " << std::string(pad, ' ') << grid[r][i];
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_comparison_csv(const std::vector<ComparisonCell>& cells) {
  std::ostringstream out;
  out << "tokenizer,corpus,total_tokens,corpus_bytes,bytes_per_token\n";
  for (const auto& c : cells) {
    out << csv_field(c.tokenizer) << ',' << csv_field(c.corpus) << ',' << c.stats.total_tokens
        << ',' << c.stats.corpus_bytes << ',' << format_bpt(c.stats.bytes_per_token) << '\n';
  }
  return out.str();
}

}  // namespace tokengraft
