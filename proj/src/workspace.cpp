#include "dac/workspace.hpp"

#include <cstdlib>

#include "dac/errors.hpp"
#include "dac/fsutil.hpp"

namespace dac {

Workspace::Workspace(fs::path root)
    : root_(std::move(root)),
      store_(std::make_shared<ObjectStore>(root_ / ".dac" / "cache")) {}

Workspace Workspace::init(const fs::path& dir) {
  fs::path root = fs::weakly_canonical(dir);
  if (fs::exists(root / ".dac"))
    throw DacError("already a dac project: " + root.string());
  fsutil::ensure_dir(root / ".dac");
  fsutil::ensure_dir(root / ".dac" / "cache");
  fsutil::ensure_dir(root / ".dac" / "revs");
  fsutil::ensure_dir(root / ".dac" / "refs" / "branch");
  fsutil::ensure_dir(root / ".dac" / "refs" / "tag");
  fsutil::ensure_dir(root / ".dac" / "refs" / "exp");
  fsutil::write_file_atomic(root / ".dac" / "refs" / "HEAD", "ref: branch/main\n");
  if (!fs::exists(root / "pipeline.dac"))
    fsutil::write_file_atomic(root / "pipeline.dac", "stages: {}\n");
  if (!fs::exists(root / "params.dac"))
    fsutil::write_file_atomic(root / "params.dac", "");
  if (!fs::exists(root / "lock.dac"))
    fsutil::write_file_atomic(root / "lock.dac", "stages: {}\n");
  return Workspace(root);
}

Workspace Workspace::discover(const fs::path& start) {
  if (const char* env = std::getenv("DAC_DIR"); env != nullptr && *env != '\0')
    return open(env);
  fs::path dir = fs::weakly_canonical(start);
  while (true) {
    if (fs::exists(dir / ".dac")) return Workspace(dir);
    fs::path parent = dir.parent_path();
    if (parent == dir) break;
    dir = parent;
  }
  throw DacError("not a dac project (no .dac directory found from " +
                 start.string() + "); run 'dac init' first");
}

Workspace Workspace::open(const fs::path& dir) {
  fs::path root = fs::weakly_canonical(dir);
  if (!fs::exists(root / ".dac"))
    throw DacError("not a dac project: " + root.string());
  return Workspace(root);
}

const std::vector<std::string>& Workspace::tracked_files() {
  static const std::vector<std::string> files = {"lock.dac", "params.dac",
                                                 "pipeline.dac"};
  return files;
}

PipelineDef Workspace::load_pipeline() const {
  return parse_pipeline(fsutil::read_file(pipeline_file()));
}

ParamTree Workspace::load_params() const {
  return ParamTree::parse(fsutil::read_file(params_file()));
}

LockFile Workspace::load_lock() const {
  if (!fs::exists(lock_file())) return LockFile{};
  return parse_lock(fsutil::read_file(lock_file()));
}

void Workspace::save_lock(const LockFile& lock) const {
  fsutil::write_file_atomic(lock_file(), emit_lock(lock));
}

}  // namespace dac
