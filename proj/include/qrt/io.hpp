#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

namespace qrt {

/// Calls `fn(line_number, line)` for every non-blank line (1-based numbering).
/// Throws DataError when the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

/// Opens `path` for writing, creating parent directories. Throws DataError.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

/// Whole-file read. Throws DataError.
std::string read_file(const std::filesystem::path& path);

}  // namespace qrt
