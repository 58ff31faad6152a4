#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dac {

// Declarative description of one pipeline stage: the command to run plus
// its parameter keys, path/attribute dependencies, and declared outputs.
// `_path` entries are user-managed files or directories; attribute entries
// (outs_attr, metrics) are serialized by the tool itself under
// `.dac/nodes/<stage>/`.
struct StageDef {
  std::string name;
  std::string cmd;
  std::vector<std::string> params;     // dotted keys into params.dac
  std::vector<std::string> deps_path;  // files or directories
  std::vector<std::string> deps_attr;  // `<stage>.<attr>` references
  std::vector<std::string> outs_path;
  std::vector<std::string> outs_attr;  // managed output attributes
  std::vector<std::string> metrics;    // managed metric attributes
  std::vector<std::string> plots;      // CSV paths

  bool has_out_attr(std::string_view a) const;
  bool has_metric(std::string_view a) const;
};

struct PipelineDef {
  std::map<std::string, StageDef> stages;  // keyed (and sorted) by name

  const StageDef& stage(std::string_view name) const;  // throws NotFoundError
};

// Convention paths for managed attribute documents.
std::string outs_doc_path(std::string_view stage);
std::string metrics_doc_path(std::string_view stage);

// Every output path a stage produces: outs_path, plots, plus the managed
// document paths implied by non-empty outs_attr / metrics.
std::vector<std::string> declared_output_paths(const StageDef& s);

// Parses and structurally validates pipeline text. Unknown keys, duplicate
// stages, duplicate producers, and dangling attribute references are
// rejected.
PipelineDef parse_pipeline(std::string_view text);

// Canonical emission: stages sorted by name; per-stage keys in the order
// cmd, params, deps_path, deps_attr, outs_path, outs_attr, metrics, plots;
// empty lists omitted. `parse(emit(p))` is the identity on PipelineDef.
std::string emit_pipeline(const PipelineDef& p);

}  // namespace dac
