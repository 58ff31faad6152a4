#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dac::fsutil {

namespace fs = std::filesystem;

// Reads a whole regular file; throws DacError with the path on failure.
std::string read_file(const fs::path& path);

// Writes bytes via a temp file in the same directory followed by rename,
// so concurrent readers never observe a partial file. Parent directories
// are created as needed.
void write_file_atomic(const fs::path& path, std::string_view data);

void ensure_dir(const fs::path& dir);

// Relative paths of all regular files under root, sorted, '/'-separated.
std::vector<std::string> list_files_recursive(const fs::path& root);

// Directory containing the running executable (resolved via /proc/self/exe
// when available).
fs::path self_exe_dir();

}  // namespace dac::fsutil
