#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dac/lockfile.hpp"
#include "dac/pipeline.hpp"
#include "dac/params.hpp"
#include "dac/workspace.hpp"

namespace dac {

// Resolved attribute: either a parsed JSON value (managed attributes,
// params) or a path to a read-only scratch checkout (path attributes).
struct AttrValue {
  enum class Kind { kValue, kPath };
  Kind kind = Kind::kValue;
  nlohmann::json value;
  fs::path path;
};

// Read-only view of one stage at one revision. Construction loads only the
// three metadata files; output data is fetched lazily on attribute access
// (from the local store, else from the optional remote), memoized, and
// never written into the workspace.
class NodeHandle {
 public:
  static NodeHandle from_rev(Workspace& ws, const std::string& stage,
                             const std::string& rev,
                             std::optional<fs::path> remote = std::nullopt);

  const std::string& stage() const { return stage_; }
  const std::string& rev() const { return rev_; }
  const StageDef& def() const { return def_; }

  // Values of the stage's declared params at this revision.
  const std::map<std::string, ParamScalar>& params() const { return params_; }

  // Declared output hashes straight from the historical lock.
  const std::map<std::string, std::string>& out_hashes() const {
    return lock_.outs;
  }

  // Resolves a declared attribute: outs_attr/metrics name, outs_path/plots
  // path, or a declared param key. Thread-safe; results are memoized.
  AttrValue get_attr(const std::string& attr);

  // Objects fetched from the remote so far.
  std::uint64_t fetch_count() const { return memo_->fetch_count; }

 private:
  NodeHandle(Workspace& ws, std::string stage, std::string rev);
  ObjectId ensure_local(const std::string& hex);
  nlohmann::json load_doc(const std::string& doc_path);

  struct Memo {
    std::mutex mu;
    std::map<std::string, AttrValue> values;
    std::uint64_t fetch_count = 0;
  };

  Workspace& ws_;
  std::string stage_;
  std::string rev_;
  StageDef def_;
  StageLock lock_;
  std::map<std::string, ParamScalar> params_;
  std::optional<fs::path> remote_;
  std::shared_ptr<Memo> memo_;
};

}  // namespace dac
