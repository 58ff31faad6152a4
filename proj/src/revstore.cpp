#include "dac/revstore.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <ctime>

#include "dac/blocktext.hpp"
#include "dac/errors.hpp"
#include "dac/fsutil.hpp"
#include "dac/object_id.hpp"
#include "dac/sha256.hpp"

namespace dac {
namespace {

constexpr const char* kHeadRefPrefix = "ref: ";

// Advisory exclusive lock held for the duration of a write operation.
class WriteLock {
 public:
  explicit WriteLock(const fs::path& path) {
    fsutil::ensure_dir(path.parent_path());
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw DacError("cannot open lock file: " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw DacError("cannot lock: " + path.string());
    }
  }
  ~WriteLock() {
    if (fd_ >= 0) ::close(fd_);  // releases the flock
  }
  WriteLock(const WriteLock&) = delete;
  WriteLock& operator=(const WriteLock&) = delete;

 private:
  int fd_ = -1;
};

fs::path ref_path(const Workspace& ws, RefKind kind, const std::string& name) {
  return ws.refs_dir() / to_string(kind) / name;
}

bool valid_ref_name(const std::string& name) {
  if (name.empty() || name == "HEAD") return false;
  for (char c : name) {
    if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
          (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.'))
      return false;
  }
  return name.front() != '.' && name.back() != '.';
}

}  // namespace

const char* to_string(RefKind k) {
  switch (k) {
    case RefKind::kBranch: return "branch";
    case RefKind::kTag: return "tag";
    case RefKind::kExperiment: return "exp";
  }
  return "?";
}

std::string emit_revision_record(const Revision& rev) {
  BlockNode root = BlockNode::make_map();
  root.add("parent",
           BlockNode::make_scalar(rev.parent ? *rev.parent : "none"));
  root.add("message", BlockNode::make_scalar(rev.message, /*quoted=*/true));
  root.add("timestamp", BlockNode::make_scalar(std::to_string(rev.timestamp)));
  BlockNode tree = BlockNode::make_map();
  for (const auto& [path, hex] : rev.tree)
    tree.add(path, BlockNode::make_scalar(hex));
  root.add("tree", std::move(tree));
  return emit_block(root);
}

Revision parse_revision_record(std::string_view text) {
  BlockNode root = parse_block(text);
  Revision rev;
  const BlockNode* parent = root.find("parent");
  const BlockNode* message = root.find("message");
  const BlockNode* timestamp = root.find("timestamp");
  const BlockNode* tree = root.find("tree");
  if (parent == nullptr || message == nullptr || timestamp == nullptr ||
      tree == nullptr || !tree->is_map())
    throw ParseError("malformed revision record", 0);
  if (parent->scalar != "none")
    rev.parent = ObjectId::from_hex(parent->scalar).hex();
  rev.message = message->scalar;
  rev.timestamp = std::strtoll(timestamp->scalar.c_str(), nullptr, 10);
  for (const auto& [path, hex] : tree->map)
    rev.tree.emplace(path, ObjectId::from_hex(hex.scalar).hex());
  rev.id = sha256_hex(text);
  return rev;
}

std::string RevStore::write_revision(Revision rev) {
  std::string record = emit_revision_record(rev);
  rev.id = sha256_hex(record);
  fs::path path = ws_.revs_dir() / rev.id;
  if (!fs::exists(path)) fsutil::write_file_atomic(path, record);
  return rev.id;
}

std::string RevStore::commit(const std::string& message, bool* noop) {
  WriteLock lock(ws_.revstore_lock_file());
  if (noop != nullptr) *noop = false;

  std::map<std::string, std::string> tree;
  for (const auto& file : Workspace::tracked_files()) {
    fs::path path = ws_.root() / file;
    if (!fs::exists(path))
      throw DacError("nothing to commit: missing tracked file '" + file + "'");
    tree[file] = ws_.store().store_file(path).hex();
  }

  Head h = head();
  if (h.id) {
    Revision parent_rev = read_revision(*h.id);
    if (parent_rev.tree == tree) {
      if (noop != nullptr) *noop = true;
      return *h.id;
    }
  }

  Revision rev;
  rev.parent = h.id;
  rev.message = message;
  rev.timestamp = next_timestamp(ws_);
  rev.tree = std::move(tree);
  std::string id = write_revision(rev);

  if (h.branch) {
    fsutil::write_file_atomic(ref_path(ws_, RefKind::kBranch, *h.branch),
                              id + "\n");
  } else {
    fsutil::write_file_atomic(ws_.refs_dir() / "HEAD", id + "\n");
  }
  return id;
}

std::string RevStore::commit_detached(
    const std::map<std::string, std::string>& tree,
    const std::optional<std::string>& parent, const std::string& message) {
  WriteLock lock(ws_.revstore_lock_file());
  Revision rev;
  rev.parent = parent;
  rev.message = message;
  rev.timestamp = next_timestamp(ws_);
  rev.tree = tree;
  return write_revision(rev);
}

Revision RevStore::read_revision(const std::string& id) const {
  fs::path path = ws_.revs_dir() / id;
  if (!fs::exists(path)) throw NotFoundError("unknown revision: " + id);
  Revision rev = parse_revision_record(fsutil::read_file(path));
  if (rev.id != id)
    throw DacError("corrupt revision record: " + id + " (content hashes to " +
                   rev.id + ")");
  return rev;
}

std::string RevStore::resolve(const std::string& name) const {
  if (name == "HEAD") {
    auto id = head_id();
    if (!id) throw NotFoundError("HEAD has no commits yet");
    return *id;
  }
  for (RefKind kind : {RefKind::kBranch, RefKind::kTag, RefKind::kExperiment}) {
    if (auto id = read_ref(kind, name)) return *id;
  }
  if (auto oid = ObjectId::try_from_hex(name)) {
    if (fs::exists(ws_.revs_dir() / oid->hex())) return oid->hex();
    throw NotFoundError("unknown revision: " + name);
  }
  // Unique id prefix.
  if (name.size() >= 4 && name.size() < 64 &&
      name.find_first_not_of("0123456789abcdef") == std::string::npos &&
      fs::exists(ws_.revs_dir())) {
    std::vector<std::string> matches;
    for (const auto& entry : fs::directory_iterator(ws_.revs_dir())) {
      std::string id = entry.path().filename().string();
      if (id.rfind(name, 0) == 0) matches.push_back(id);
    }
    if (matches.size() == 1) return matches.front();
    if (matches.size() > 1)
      throw NotFoundError("ambiguous revision prefix: " + name);
  }
  throw NotFoundError("unknown revision: " + name);
}

void RevStore::checkout_rev(const std::string& name, bool force) {
  WriteLock lock(ws_.revstore_lock_file());
  std::string id = resolve(name);
  Revision rev = read_revision(id);

  if (!force && is_dirty())
    throw DirtyWorkspaceError(
        "tracked metadata files have uncommitted changes (use --force to "
        "discard)");

  for (const auto& file : Workspace::tracked_files()) {
    auto it = rev.tree.find(file);
    if (it == rev.tree.end())
      throw DacError("revision " + id + " does not track '" + file + "'");
    fsutil::write_file_atomic(ws_.root() / file,
                              ws_.store().read_bytes(ObjectId::from_hex(it->second)));
  }

  if (read_ref(RefKind::kBranch, name).has_value()) {
    fsutil::write_file_atomic(ws_.refs_dir() / "HEAD",
                              std::string(kHeadRefPrefix) + "branch/" + name + "\n");
  } else {
    fsutil::write_file_atomic(ws_.refs_dir() / "HEAD", id + "\n");
  }
}

std::string RevStore::read_file_at(const std::string& rev,
                                   const std::string& path) const {
  Revision r = read_revision(resolve(rev));
  auto it = r.tree.find(path);
  if (it == r.tree.end())
    throw NotFoundError("path '" + path + "' not tracked at revision " + r.id);
  return ws_.store().read_bytes(ObjectId::from_hex(it->second));
}

std::vector<Revision> RevStore::log() const {
  std::vector<Revision> out;
  auto id = head_id();
  while (id) {
    Revision rev = read_revision(*id);
    id = rev.parent;
    out.push_back(std::move(rev));
  }
  return out;
}

void RevStore::create_ref(RefKind kind, const std::string& name,
                          const std::string& id, bool allow_overwrite) {
  if (!valid_ref_name(name))
    throw ValidationError("bad ref name: '" + name + "'");
  fs::path path = ref_path(ws_, kind, name);
  if (!allow_overwrite && fs::exists(path))
    throw DacError(std::string(to_string(kind)) + " already exists: '" + name +
                   "'");
  if (!fs::exists(ws_.revs_dir() / id))
    throw NotFoundError("unknown revision: " + id);
  fsutil::write_file_atomic(path, id + "\n");
}

std::optional<std::string> RevStore::read_ref(RefKind kind,
                                              const std::string& name) const {
  fs::path path = ref_path(ws_, kind, name);
  if (!fs::exists(path)) return std::nullopt;
  std::string text = fsutil::read_file(path);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
    text.pop_back();
  return ObjectId::from_hex(text).hex();
}

std::vector<Ref> RevStore::list_refs() const {
  std::vector<Ref> out;
  for (RefKind kind : {RefKind::kBranch, RefKind::kTag, RefKind::kExperiment}) {
    fs::path dir = ws_.refs_dir() / to_string(kind);
    if (!fs::exists(dir)) continue;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::string name = entry.path().filename().string();
      if (auto id = read_ref(kind, name)) out.push_back({kind, name, *id});
    }
  }
  std::sort(out.begin(), out.end(), [](const Ref& a, const Ref& b) {
    return std::tie(a.kind, a.name) < std::tie(b.kind, b.name);
  });
  return out;
}

RevStore::Head RevStore::head() const {
  Head h;
  fs::path head_file = ws_.refs_dir() / "HEAD";
  if (!fs::exists(head_file)) {
    h.branch = "main";  // unborn default
    return h;
  }
  std::string text = fsutil::read_file(head_file);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
    text.pop_back();
  if (text.rfind(kHeadRefPrefix, 0) == 0) {
    std::string target = text.substr(std::string(kHeadRefPrefix).size());
    if (target.rfind("branch/", 0) != 0)
      throw DacError("malformed HEAD: " + text);
    h.branch = target.substr(7);
    if (auto id = read_ref(RefKind::kBranch, *h.branch)) h.id = *id;
    return h;
  }
  h.id = ObjectId::from_hex(text).hex();
  return h;
}

std::optional<std::string> RevStore::head_id() const { return head().id; }

bool RevStore::is_dirty() const {
  auto id = head_id();
  auto current = workspace_tree();
  if (!id) {
    // Unborn HEAD: content in any tracked file beyond the init seeds counts
    // as uncommitted work.
    for (const auto& file : Workspace::tracked_files()) {
      if (!fs::exists(ws_.root() / file)) continue;
      std::string text = fsutil::read_file(ws_.root() / file);
      if (!text.empty() && text != "stages: {}\n") return true;
    }
    return false;
  }
  return read_revision(*id).tree != current;
}

std::map<std::string, std::string> RevStore::workspace_tree() const {
  std::map<std::string, std::string> tree;
  for (const auto& file : Workspace::tracked_files()) {
    fs::path path = ws_.root() / file;
    if (fs::exists(path)) tree[file] = ws_.store().hash_file(path).hex();
  }
  return tree;
}

std::int64_t next_timestamp(Workspace& ws) {
  const char* det = std::getenv("DAC_DETERMINISTIC_TIME");
  if (det == nullptr || std::string_view(det) != "1")
    return static_cast<std::int64_t>(std::time(nullptr));

  std::int64_t value = 0;
  if (fs::exists(ws.clock_file()))
    value = std::strtoll(fsutil::read_file(ws.clock_file()).c_str(), nullptr, 10);
  fsutil::write_file_atomic(ws.clock_file(), std::to_string(value + 1) + "\n");
  return value;
}

}  // namespace dac
