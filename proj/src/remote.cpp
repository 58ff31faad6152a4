#include "dac/remote.hpp"

#include <set>

#include "dac/errors.hpp"
#include "dac/fsutil.hpp"
#include "dac/lockfile.hpp"

namespace dac {
namespace {

fs::path remote_object_path(const fs::path& remote_dir, const ObjectId& oid) {
  return remote_dir / "cache" / oid.shard() / oid.rest();
}

// Data objects referenced by one lock. Keys with a tree marker are
// directory manifests whose listed file objects belong to the closure too;
// attribute and param pseudo-deps are value hashes, not stored objects.
struct LockClosure {
  std::set<std::string> files;
  std::set<std::string> manifests;
};

void collect_lock_closure(const LockFile& lock, LockClosure* out) {
  auto insert = [&](const std::string& key, const std::string& hex) {
    (is_tree_path(key) ? out->manifests : out->files).insert(hex);
  };
  for (const auto& [stage, sl] : lock.stages) {
    for (const auto& [key, hex] : sl.outs) insert(key, hex);
    for (const auto& [key, hex] : sl.deps) {
      if (is_path_dep(key)) insert(key, hex);
    }
  }
}

// Adds the file objects listed by locally-present manifests.
void expand_manifests(const ObjectStore& store, LockClosure* closure) {
  for (const auto& hex : closure->manifests) {
    ObjectId oid = ObjectId::from_hex(hex);
    if (!store.has(oid)) continue;
    std::string bytes = store.read_bytes(oid);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      std::size_t eol = bytes.find('\n', pos);
      if (eol == std::string::npos) eol = bytes.size();
      std::string_view line(bytes.data() + pos, eol - pos);
      pos = eol + 1;
      if (line.size() >= 66 && line[64] == ' ')
        if (auto entry = ObjectId::try_from_hex(line.substr(0, 64)))
          closure->files.insert(entry->hex());
    }
  }
}

}  // namespace

std::size_t push(Workspace& ws, const fs::path& remote_dir) {
  fsutil::ensure_dir(remote_dir / "cache");
  fsutil::ensure_dir(remote_dir / "revs");
  fsutil::ensure_dir(remote_dir / "refs");

  LockClosure closure;
  std::set<std::string> meta_oids;

  if (fs::exists(ws.revs_dir())) {
    for (const auto& entry : fs::directory_iterator(ws.revs_dir())) {
      Revision rev = parse_revision_record(fsutil::read_file(entry.path()));
      for (const auto& [path, hex] : rev.tree) meta_oids.insert(hex);
      auto lock_oid = rev.tree.find("lock.dac");
      if (lock_oid != rev.tree.end()) {
        ObjectId oid = ObjectId::from_hex(lock_oid->second);
        if (ws.store().has(oid))
          collect_lock_closure(parse_lock(ws.store().read_bytes(oid)), &closure);
      }
      fs::path dest = remote_dir / "revs" / entry.path().filename();
      if (!fs::exists(dest))
        fsutil::write_file_atomic(dest, fsutil::read_file(entry.path()));
    }
  }
  expand_manifests(ws.store(), &closure);

  std::size_t transferred = 0;
  auto upload = [&](const std::string& hex, bool count) {
    ObjectId oid = ObjectId::from_hex(hex);
    fs::path dest = remote_object_path(remote_dir, oid);
    if (fs::exists(dest)) return;
    fs::path src = ws.store().object_path(oid);
    if (!fs::exists(src)) throw ObjectMissingError(hex);
    fsutil::write_file_atomic(dest, fsutil::read_file(src));
    if (count) ++transferred;
  };
  for (const auto& hex : closure.files) upload(hex, true);
  for (const auto& hex : closure.manifests) upload(hex, true);
  for (const auto& hex : meta_oids) upload(hex, false);

  // Refs export (HEAD included); the remote mirrors the local ref state.
  if (fs::exists(ws.refs_dir())) {
    for (auto it = fs::recursive_directory_iterator(ws.refs_dir());
         it != fs::recursive_directory_iterator(); ++it) {
      if (!it->is_regular_file()) continue;
      fs::path rel = fs::relative(it->path(), ws.refs_dir());
      fsutil::write_file_atomic(remote_dir / "refs" / rel,
                                fsutil::read_file(it->path()));
    }
  }
  return transferred;
}

std::size_t pull(Workspace& ws, const fs::path& remote_dir,
                 const std::string& rev) {
  if (!fs::exists(remote_dir))
    throw DacError("remote not found: " + remote_dir.string());

  RevStore revs(ws);
  std::string name = rev.empty() ? "HEAD" : rev;
  std::string id;
  try {
    id = revs.resolve(name);
  } catch (const NotFoundError&) {
    auto remote_id = remote_resolve(remote_dir, name);
    if (!remote_id) throw;
    id = *remote_id;
  }

  // Import the revision record when we only know it from the remote.
  if (!fs::exists(ws.revs_dir() / id)) {
    fs::path src = remote_dir / "revs" / id;
    if (!fs::exists(src)) throw NotFoundError("unknown revision: " + id);
    fsutil::ensure_dir(ws.revs_dir());
    fsutil::write_file_atomic(ws.revs_dir() / id, fsutil::read_file(src));
  }
  Revision revision = revs.read_revision(id);

  // Metadata blobs first (uncounted), then the lock's data closure.
  for (const auto& [path, hex] : revision.tree) {
    ObjectId oid = ObjectId::from_hex(hex);
    if (!ws.store().has(oid) && !remote_fetch_object(remote_dir, oid, ws.store()))
      throw ObjectMissingError(hex);
  }

  LockFile lock = parse_lock(ws.store().read_bytes(
      ObjectId::from_hex(revision.tree.at("lock.dac"))));
  LockClosure closure;
  collect_lock_closure(lock, &closure);

  std::size_t transferred = 0;
  auto fetch = [&](const std::string& hex) {
    ObjectId oid = ObjectId::from_hex(hex);
    if (ws.store().has(oid)) return;
    if (!remote_fetch_object(remote_dir, oid, ws.store()))
      throw ObjectMissingError(hex);
    ++transferred;
  };
  for (const auto& hex : closure.manifests) fetch(hex);
  expand_manifests(ws.store(), &closure);
  for (const auto& hex : closure.files) fetch(hex);
  return transferred;
}

std::optional<std::string> remote_resolve(const fs::path& remote_dir,
                                          const std::string& name) {
  auto read_ref_file = [&](const fs::path& path) -> std::optional<std::string> {
    if (!fs::exists(path)) return std::nullopt;
    std::string text = fsutil::read_file(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
      text.pop_back();
    if (text.rfind("ref: ", 0) == 0)
      return remote_resolve(remote_dir, text.substr(text.rfind('/') + 1));
    auto oid = ObjectId::try_from_hex(text);
    return oid ? std::optional(oid->hex()) : std::nullopt;
  };

  if (name == "HEAD") return read_ref_file(remote_dir / "refs" / "HEAD");
  for (const char* kind : {"branch", "tag", "exp"}) {
    if (auto id = read_ref_file(remote_dir / "refs" / kind / name)) return id;
  }
  if (auto oid = ObjectId::try_from_hex(name)) {
    if (fs::exists(remote_dir / "revs" / oid->hex())) return oid->hex();
  }
  return std::nullopt;
}

std::optional<Revision> remote_read_revision(const fs::path& remote_dir,
                                             const std::string& id) {
  fs::path path = remote_dir / "revs" / id;
  if (!fs::exists(path)) return std::nullopt;
  Revision rev = parse_revision_record(fsutil::read_file(path));
  if (rev.id != id) throw DacError("corrupt revision record at remote: " + id);
  return rev;
}

bool remote_fetch_object(const fs::path& remote_dir, const ObjectId& oid,
                         ObjectStore& local) {
  fs::path src = remote_object_path(remote_dir, oid);
  if (!fs::exists(src)) return false;
  ObjectId stored = local.store_bytes(fsutil::read_file(src));
  if (stored != oid)
    throw DacError("remote object corrupt: expected " + oid.hex() + ", got " +
                   stored.hex());
  return true;
}

}  // namespace dac
