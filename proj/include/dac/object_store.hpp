#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dac/object_id.hpp"

namespace dac {

namespace fs = std::filesystem;

enum class CheckoutMode { kCopy, kLink };

// Content-addressed blob store. Objects live at
// <root>/<first 2 hex>/<remaining 62 hex> and are immutable once ingested;
// writes go through a temp file plus rename so concurrent stores of the
// same content are safe and partial objects are never visible.
class ObjectStore {
 public:
  explicit ObjectStore(fs::path root);

  const fs::path& root() const { return root_; }
  fs::path object_path(const ObjectId& oid) const;

  // Hash without storing.
  static ObjectId hash_bytes(std::string_view data);
  ObjectId hash_file(const fs::path& path) const;

  ObjectId store_bytes(std::string_view data);
  ObjectId store_file(const fs::path& path);

  // Stores every regular file under dir plus a manifest object listing
  // them (one `<64-hex> <relative path>` line per file, sorted by path).
  // Returns the manifest's id.
  ObjectId store_tree(const fs::path& dir);

  // Hash of the manifest a directory would store to, without storing.
  ObjectId hash_tree(const fs::path& dir) const;

  // Materializes an object to dest. Throws ObjectMissingError when the
  // object is not present locally.
  void checkout(const ObjectId& oid, const fs::path& dest,
                CheckoutMode mode = CheckoutMode::kCopy) const;

  // Materializes a stored directory manifest under dest_dir.
  void checkout_tree(const ObjectId& manifest, const fs::path& dest_dir,
                     CheckoutMode mode = CheckoutMode::kCopy) const;

  bool has(const ObjectId& oid) const;

  // Object content as bytes (for small metadata blobs).
  std::string read_bytes(const ObjectId& oid) const;

  // Number of objects currently in the store.
  std::size_t object_count() const;

  // Instrumentation. read_count increments whenever object content leaves
  // the store (checkout or read_bytes); write_count only on ingests that
  // actually created a new object.
  std::uint64_t read_count() const { return reads_.load(); }
  std::uint64_t write_count() const { return writes_.load(); }

 private:
  ObjectId ingest(std::string_view data);

  fs::path root_;
  mutable std::atomic<std::uint64_t> reads_{0};
  std::atomic<std::uint64_t> writes_{0};
};

// True when the id names a directory manifest according to the owning
// record (paths recorded with a trailing '/'). Helper for lock handling.
bool is_tree_path(std::string_view recorded_path);

}  // namespace dac
