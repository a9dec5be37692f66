#include "tokengraft/corpus.hpp"

#include "json_util.hpp"
#include "tokengraft/error.hpp"

namespace tokengraft {

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "lines") return CorpusFormat::kLines;
  if (name == "jsonl") return CorpusFormat::kJsonl;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected lines|jsonl)");
}

std::vector<std::string> parse_corpus(std::string_view content, CorpusFormat format) {
  std::vector<std::string> docs;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (format == CorpusFormat::kLines) {
      docs.emplace_back(line);
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto where = "corpus line " + std::to_string(line_no);
    const auto j = detail::parse_json(line, where);
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw FormatError(where + ": expected an object with a string \"text\" field");
    }
    docs.push_back(j["text"].get<std::string>());
  }
  return docs;
}

std::vector<std::string> read_corpus(const std::filesystem::path& path, CorpusFormat format) {
  try {
    return parse_corpus(detail::read_file(path), format);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace tokengraft
