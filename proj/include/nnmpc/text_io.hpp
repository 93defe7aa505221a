#pragma once

#include <filesystem>
#include <string>

namespace nnmpc {

/// Shortest-safe decimal with 17 significant digits; round-trips exactly.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Git blob hash ("blob <size>\0" + content), lowercase hex SHA-1.
std::string git_blob_hash(const std::string& content);

}  // namespace nnmpc
