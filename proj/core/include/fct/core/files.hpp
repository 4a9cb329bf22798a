#pragma once

#include <filesystem>
#include <string>

namespace fct {

// Writes to a sibling temporary file and renames it over `path`, so readers
// see either the old content or the new one.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fct
