#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tokengraft::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputFormat = 2,
  kInternal = 3,
};

// Parses argv, runs the subcommand, and maps errors onto exit codes.
// Diagnostics go to stderr; tables go to stdout.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

// "E000", "U+E000" or "0xE000" -> UTF-8 bytes of that scalar.
std::string parse_codepoint_hex(std::string_view text);

}  // namespace tokengraft::cli
