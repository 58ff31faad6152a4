#include "dac/object_store.hpp"

#include <unistd.h>

#include <fstream>
#include <system_error>
#include <utility>
#include <vector>

#include "dac/errors.hpp"
#include "dac/fsutil.hpp"
#include "dac/sha256.hpp"

namespace dac {

ObjectStore::ObjectStore(fs::path root) : root_(std::move(root)) {}

fs::path ObjectStore::object_path(const ObjectId& oid) const {
  return root_ / oid.shard() / oid.rest();
}

ObjectId ObjectStore::hash_bytes(std::string_view data) {
  return ObjectId::of_bytes(data);
}

ObjectId ObjectStore::hash_file(const fs::path& path) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DacError("cannot read file: " + path.string());
  Sha256 ctx;
  char buf[65536];
  while (in.good()) {
    in.read(buf, sizeof(buf));
    std::streamsize n = in.gcount();
    if (n > 0) ctx.update(buf, static_cast<std::size_t>(n));
  }
  if (in.bad()) throw DacError("read error: " + path.string());
  auto digest = ctx.finish();
  return ObjectId::from_hex(to_hex(digest.data(), digest.size()));
}

ObjectId ObjectStore::ingest(std::string_view data) {
  ObjectId oid = ObjectId::of_bytes(data);
  fs::path dest = object_path(oid);
  if (fs::exists(dest)) return oid;  // re-ingest of identical bytes: no-op

  fsutil::write_file_atomic(dest, data);
  std::error_code ec;
  fs::permissions(dest,
                  fs::perms::owner_read | fs::perms::group_read |
                      fs::perms::others_read,
                  fs::perm_options::replace, ec);
  writes_.fetch_add(1);
  return oid;
}

ObjectId ObjectStore::store_bytes(std::string_view data) {
  return ingest(data);
}

ObjectId ObjectStore::store_file(const fs::path& path) {
  if (!fs::exists(path)) throw DacError("no such file: " + path.string());
  if (!fs::is_regular_file(path))
    throw DacError("not a regular file: " + path.string());
  return ingest(fsutil::read_file(path));
}

ObjectId ObjectStore::store_tree(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DacError("not a directory: " + dir.string());
  std::string manifest;
  for (const auto& rel : fsutil::list_files_recursive(dir)) {
    ObjectId oid = store_file(dir / rel);
    manifest += oid.hex();
    manifest += ' ';
    manifest += rel;
    manifest += '\n';
  }
  return ingest(manifest);
}

ObjectId ObjectStore::hash_tree(const fs::path& dir) const {
  if (!fs::is_directory(dir)) throw DacError("not a directory: " + dir.string());
  std::string manifest;
  for (const auto& rel : fsutil::list_files_recursive(dir)) {
    manifest += hash_file(dir / rel).hex();
    manifest += ' ';
    manifest += rel;
    manifest += '\n';
  }
  return ObjectId::of_bytes(manifest);
}

void ObjectStore::checkout(const ObjectId& oid, const fs::path& dest,
                           CheckoutMode mode) const {
  fs::path src = object_path(oid);
  if (!fs::exists(src)) throw ObjectMissingError(oid.hex());
  reads_.fetch_add(1);

  fs::path dir = dest.parent_path();
  if (!dir.empty()) fsutil::ensure_dir(dir);

  std::error_code ec;
  if (mode == CheckoutMode::kLink) {
    // Hard link to the read-only object, made visible atomically.
    fs::path tmp = dest;
    tmp += ".dac-lnk." + std::to_string(::getpid());
    fs::remove(tmp, ec);
    fs::create_hard_link(src, tmp, ec);
    if (!ec) {
      fs::rename(tmp, dest, ec);
      if (!ec) return;
      fs::remove(tmp, ec);
    }
    // Cross-device or unsupported: fall through to copy.
  }
  // Temp-plus-rename keeps concurrent checkouts of the same path safe.
  fsutil::write_file_atomic(dest, fsutil::read_file(src));
  fs::permissions(dest,
                  fs::perms::owner_read | fs::perms::owner_write |
                      fs::perms::group_read | fs::perms::others_read,
                  fs::perm_options::replace, ec);
}

void ObjectStore::checkout_tree(const ObjectId& manifest,
                                const fs::path& dest_dir,
                                CheckoutMode mode) const {
  std::string text = read_bytes(manifest);
  fsutil::ensure_dir(dest_dir);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    if (line.empty()) continue;
    if (line.size() < 66 || line[64] != ' ')
      throw ParseError("bad manifest entry in object " + manifest.hex(), line_no);
    ObjectId oid = ObjectId::from_hex(line.substr(0, 64));
    fs::path rel(std::string(line.substr(65)));
    checkout(oid, dest_dir / rel, mode);
  }
}

bool ObjectStore::has(const ObjectId& oid) const {
  return fs::exists(object_path(oid));
}

std::string ObjectStore::read_bytes(const ObjectId& oid) const {
  fs::path src = object_path(oid);
  if (!fs::exists(src)) throw ObjectMissingError(oid.hex());
  reads_.fetch_add(1);
  return fsutil::read_file(src);
}

std::size_t ObjectStore::object_count() const {
  if (!fs::exists(root_)) return 0;
  std::size_t n = 0;
  for (auto it = fs::recursive_directory_iterator(root_);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file()) ++n;
  }
  return n;
}

bool is_tree_path(std::string_view recorded_path) {
  return !recorded_path.empty() && recorded_path.back() == '/';
}

}  // namespace dac
