#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tokengraft {

enum class CorpusFormat {
  kLines,  // one document per line
  kJsonl,  // one JSON object per line with a string "text" field
};

// Throws ConfigError for unknown names ("lines", "jsonl").
CorpusFormat parse_corpus_format(std::string_view name);

// Throws FormatError (with the line number) on malformed JSON lines.
std::vector<std::string> parse_corpus(std::string_view content, CorpusFormat format);
std::vector<std::string> read_corpus(const std::filesystem::path& path, CorpusFormat format);

}  // namespace tokengraft
