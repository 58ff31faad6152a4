#include "dac/subprocess.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <vector>

#include "dac/errors.hpp"
#include "dac/fsutil.hpp"

extern char** environ;

namespace dac {
namespace {

// Snapshot of the environment with PATH adjusted, built once.
const std::vector<std::string>& adjusted_env() {
  static std::vector<std::string> env = [] {
    std::string self_dir = fsutil::self_exe_dir().string();
    std::vector<std::string> out;
    bool have_path = false;
    for (char** e = environ; *e != nullptr; ++e) {
      std::string entry(*e);
      if (entry.rfind("PATH=", 0) == 0) {
        have_path = true;
        std::string value = entry.substr(5);
        if (value.find(self_dir) == std::string::npos)
          entry = "PATH=" + self_dir + ":" + value;
      }
      out.push_back(std::move(entry));
    }
    if (!have_path) out.push_back("PATH=" + self_dir);
    return out;
  }();
  return env;
}

}  // namespace

int run_shell_command(const std::string& cmd, const std::filesystem::path& cwd) {
  const auto& env = adjusted_env();
  std::vector<char*> envp;
  envp.reserve(env.size() + 1);
  for (const auto& e : env) envp.push_back(const_cast<char*>(e.c_str()));
  envp.push_back(nullptr);

  const char* argv[] = {"/bin/sh", "-c", cmd.c_str(), nullptr};

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  std::string cwd_str = cwd.string();
  posix_spawn_file_actions_addchdir_np(&actions, cwd_str.c_str());

  pid_t pid = 0;
  int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr,
                       const_cast<char**>(argv), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0)
    throw DacError("cannot spawn shell: " + std::string(std::strerror(rc)));

  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR)
      throw DacError("waitpid failed: " + std::string(std::strerror(errno)));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 1;
}

}  // namespace dac
