#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dac/workspace.hpp"

namespace dac {

// Immutable snapshot of the tracked metadata files. The id is the SHA-256
// of the canonical record text, which covers parent, message, timestamp,
// and the tree listing.
struct Revision {
  std::string id;
  std::optional<std::string> parent;
  std::string message;
  std::int64_t timestamp = 0;
  std::map<std::string, std::string> tree;  // tracked path -> object hex
};

enum class RefKind { kBranch, kTag, kExperiment };

const char* to_string(RefKind k);

struct Ref {
  RefKind kind;
  std::string name;
  std::string target;  // revision id
};

// Canonical revision record codec (also used when reading a remote's
// exported records).
std::string emit_revision_record(const Revision& rev_without_id);
Revision parse_revision_record(std::string_view text);

// Minimal append-only revision store for the three tracked metadata files.
// Records live under `.dac/revs/<id>`; refs under `.dac/refs/<kind>/<name>`
// with HEAD at `.dac/refs/HEAD`. Writers serialize on an advisory file
// lock; readers are lock-free.
class RevStore {
 public:
  explicit RevStore(Workspace& ws) : ws_(ws) {}

  // Snapshots the tracked files as a new revision on the current branch
  // (or detached HEAD). Committing an identical tree is a no-op that
  // returns the parent id (and sets *noop when given).
  std::string commit(const std::string& message, bool* noop = nullptr);

  // Records a revision without moving HEAD or any branch; used for
  // experiment results.
  std::string commit_detached(const std::map<std::string, std::string>& tree,
                              const std::optional<std::string>& parent,
                              const std::string& message);

  Revision read_revision(const std::string& id) const;

  // Resolves "HEAD", a branch/tag/experiment name, a full id, or a unique
  // id prefix (>= 4 chars). Throws NotFoundError.
  std::string resolve(const std::string& name) const;

  // Restores the tracked files to the revision and moves HEAD (onto the
  // branch when `name` names one, detached otherwise). Refuses to
  // overwrite uncommitted changes unless force is set.
  void checkout_rev(const std::string& name, bool force = false);

  // Historical bytes of a tracked file; never touches the workspace.
  std::string read_file_at(const std::string& rev, const std::string& path) const;

  // HEAD-first parent chain.
  std::vector<Revision> log() const;

  void create_ref(RefKind kind, const std::string& name, const std::string& id,
                  bool allow_overwrite = false);
  std::optional<std::string> read_ref(RefKind kind, const std::string& name) const;
  std::vector<Ref> list_refs() const;

  struct Head {
    std::optional<std::string> branch;  // set when on a branch (may be unborn)
    std::optional<std::string> id;      // resolved commit, if any
  };
  Head head() const;
  std::optional<std::string> head_id() const;

  // Tracked files differ from the HEAD revision (an unborn HEAD with
  // existing content counts as dirty).
  bool is_dirty() const;

  // Content hashes of the tracked workspace files (no ingestion).
  std::map<std::string, std::string> workspace_tree() const;

 private:
  std::string write_revision(Revision rev);
  Workspace& ws_;
};

// Seconds since epoch, or a persistent per-project counter when
// DAC_DETERMINISTIC_TIME=1 (so golden tests get stable, still strictly
// increasing timestamps).
std::int64_t next_timestamp(Workspace& ws);

}  // namespace dac
