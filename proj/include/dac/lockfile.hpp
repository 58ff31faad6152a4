#pragma once

#include <map>
#include <string>
#include <string_view>

namespace dac {

// Resolved state of one stage after a successful run: the fingerprint it
// ran under plus the content hashes of every input and output.
//
// Dep keys encode their kind: plain keys are workspace paths (a trailing
// '/' marks a directory manifest), `attr:<stage>.<attr>` keys are
// attribute dependencies hashed at value level, and `param:<dotted>` keys
// record the hash of a parameter's canonical rendering so status can name
// the exact key that changed.
struct StageLock {
  std::string fingerprint;                  // 64-hex
  std::map<std::string, std::string> deps;  // name -> 64-hex
  std::map<std::string, std::string> outs;  // path -> 64-hex
};

struct LockFile {
  std::map<std::string, StageLock> stages;

  const StageLock* find(std::string_view stage) const;
};

LockFile parse_lock(std::string_view text);

// Canonical emission: stages sorted, then fingerprint, deps, outs with
// sorted entries. Empty maps render as `{}`.
std::string emit_lock(const LockFile& lock);

// Same `outs:` block, used for run-cache entries.
std::string emit_outs_entry(const std::map<std::string, std::string>& outs);
std::map<std::string, std::string> parse_outs_entry(std::string_view text);

constexpr std::string_view kAttrDepPrefix = "attr:";
constexpr std::string_view kParamDepPrefix = "param:";

bool is_attr_dep(std::string_view dep_name);
bool is_param_dep(std::string_view dep_name);
bool is_path_dep(std::string_view dep_name);

}  // namespace dac
