#pragma once

#include <filesystem>
#include <string>

namespace dac {

// Runs a command through the platform shell with the given working
// directory. The directory containing the current executable is prepended
// to PATH so `dac builtin ...` stage commands resolve without an install.
// Returns the exit code (128+signal when terminated by a signal).
int run_shell_command(const std::string& cmd, const std::filesystem::path& cwd);

}  // namespace dac
