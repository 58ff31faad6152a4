#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dac/lockfile.hpp"
#include "dac/object_store.hpp"
#include "dac/params.hpp"
#include "dac/pipeline.hpp"

namespace dac {

namespace fs = std::filesystem;

// An initialized project: the directory containing `.dac/` plus the three
// tracked metadata files at its root. Owns the local object store.
class Workspace {
 public:
  // Creates `.dac/` and seed metadata files; errors if already initialized.
  static Workspace init(const fs::path& dir);

  // Opens the project at the nearest ancestor containing `.dac/`.
  // The DAC_DIR environment variable overrides discovery.
  static Workspace discover(const fs::path& start);

  // Opens dir as the project root (must contain `.dac/`).
  static Workspace open(const fs::path& dir);

  const fs::path& root() const { return root_; }
  ObjectStore& store() { return *store_; }
  const ObjectStore& store() const { return *store_; }

  fs::path dac_dir() const { return root_ / ".dac"; }
  fs::path pipeline_file() const { return root_ / "pipeline.dac"; }
  fs::path params_file() const { return root_ / "params.dac"; }
  fs::path lock_file() const { return root_ / "lock.dac"; }
  fs::path cache_dir() const { return dac_dir() / "cache"; }
  fs::path nodes_dir() const { return dac_dir() / "nodes"; }
  fs::path runcache_dir() const { return dac_dir() / "runcache"; }
  fs::path revs_dir() const { return dac_dir() / "revs"; }
  fs::path refs_dir() const { return dac_dir() / "refs"; }
  fs::path scratch_dir() const { return dac_dir() / "scratch"; }
  fs::path expqueue_dir() const { return dac_dir() / "expqueue"; }
  fs::path clock_file() const { return dac_dir() / "clock"; }
  fs::path revstore_lock_file() const { return dac_dir() / "revstore.lock"; }

  // The metadata files captured by revisions, sorted.
  static const std::vector<std::string>& tracked_files();

  PipelineDef load_pipeline() const;
  ParamTree load_params() const;
  LockFile load_lock() const;
  void save_lock(const LockFile& lock) const;

 private:
  explicit Workspace(fs::path root);
  fs::path root_;
  std::shared_ptr<ObjectStore> store_;
};

}  // namespace dac
