#pragma once

#include <filesystem>
#include <string>

namespace mepo::app {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::string sha256_text(const std::string& text);

} // namespace mepo::app
