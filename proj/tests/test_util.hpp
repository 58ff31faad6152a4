#pragma once

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dac/fsutil.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Self-deleting scratch directory.
class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (fs::temp_directory_path() / "dac-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (::mkdtemp(buf.data()) == nullptr)
      throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline fs::path dac_bin() { return dac::fsutil::self_exe_dir() / "dac"; }

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

// Runs the dac CLI with the given args in `cwd`, capturing stdout.
// Deterministic timestamps are always on for tests.
inline CliResult run_cli(const std::vector<std::string>& args, const fs::path& cwd) {
  fs::path out_file = cwd / ".cli-stdout";
  std::string cmd = "cd " + shell_quote(cwd.string()) +
                    " && DAC_DETERMINISTIC_TIME=1 " +
                    shell_quote(dac_bin().string());
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " > " + shell_quote(out_file.string());
  int status = std::system(cmd.c_str());

  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
  if (fs::exists(out_file)) {
    r.output = dac::fsutil::read_file(out_file);
    fs::remove(out_file);
  }
  return r;
}

inline void write(const fs::path& path, const std::string& text) {
  dac::fsutil::write_file_atomic(path, text);
}

inline std::string read(const fs::path& path) {
  return dac::fsutil::read_file(path);
}

}  // namespace testutil
