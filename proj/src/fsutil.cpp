#include "dac/fsutil.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <system_error>

#include "dac/errors.hpp"

namespace dac::fsutil {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DacError("cannot read file: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw DacError("read error: " + path.string());
  return data;
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);

  static std::atomic<unsigned> counter{0};
  std::string tmp_name = "." + path.filename().string() + ".tmp." +
                         std::to_string(::getpid()) + "." +
                         std::to_string(counter.fetch_add(1));
  fs::path tmp = dir / tmp_name;

  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DacError("cannot write file: " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DacError("write error: " + tmp.string());
    }
  }

  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DacError("cannot rename into place: " + path.string());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DacError("cannot create directory: " + dir.string());
}

std::vector<std::string> list_files_recursive(const fs::path& root) {
  std::vector<std::string> out;
  for (auto it = fs::recursive_directory_iterator(root);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file()) {
      out.push_back(fs::relative(it->path(), root).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path self_exe_dir() {
  std::error_code ec;
  fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return fs::current_path();
  return exe.parent_path();
}

}  // namespace dac::fsutil
