#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "dac/object_id.hpp"
#include "dac/object_store.hpp"
#include "dac/revstore.hpp"
#include "dac/workspace.hpp"

namespace dac {

// A remote is a plain directory mirroring the project's storage layout:
// `cache/` (sharded objects), `revs/` (revision records), `refs/`. Other
// transports would sit behind the same operations.

// Uploads every data object referenced by any revision's lock, plus the
// revision records, refs, and metadata blobs. Returns how many data
// objects were actually transferred (metadata sync is not counted).
std::size_t push(Workspace& ws, const fs::path& remote_dir);

// Fetches the data objects referenced by the lock of `rev` (default HEAD)
// into the local store, importing the revision record and metadata blobs
// when absent. Returns the number of data objects transferred. Throws
// ObjectMissingError naming the id when the remote lacks an object.
std::size_t pull(Workspace& ws, const fs::path& remote_dir,
                 const std::string& rev = "");

// Read-only helpers against a remote directory, used by lazy node loading.
std::optional<std::string> remote_resolve(const fs::path& remote_dir,
                                          const std::string& name);
std::optional<Revision> remote_read_revision(const fs::path& remote_dir,
                                             const std::string& id);
// Copies one object from the remote into the local store; false when the
// remote does not have it.
bool remote_fetch_object(const fs::path& remote_dir, const ObjectId& oid,
                         ObjectStore& local);

}  // namespace dac
