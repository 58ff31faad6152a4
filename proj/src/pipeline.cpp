#include "dac/pipeline.hpp"

#include <algorithm>

#include "dac/blocktext.hpp"
#include "dac/errors.hpp"
#include "dac/params.hpp"

namespace dac {
namespace {

constexpr const char* kStageKeys[] = {"cmd",       "params",    "deps_path",
                                      "deps_attr", "outs_path", "outs_attr",
                                      "metrics",   "plots"};

bool is_valid_path(std::string_view p) {
  if (p.empty()) return false;
  if (p.find(':') != std::string_view::npos) return false;
  if (p.front() == '/' || p.front() == '-' || p.front() == '#' ||
      p.front() == '"' || p.front() == ' ')
    return false;
  if (p.back() == '/' || p.back() == ' ') return false;
  if (p.find('\n') != std::string_view::npos) return false;
  // No parent escapes.
  std::size_t pos = 0;
  while (pos <= p.size()) {
    std::size_t slash = p.find('/', pos);
    std::string_view part = slash == std::string_view::npos
                                ? p.substr(pos)
                                : p.substr(pos, slash - pos);
    if (part == ".." || part.empty()) return false;
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  return true;
}

bool is_reserved_path(std::string_view p) {
  return p == ".dac" || p.rfind(".dac/", 0) == 0;
}

std::vector<std::string> string_list(const BlockNode& node,
                                     const std::string& stage,
                                     const std::string& key) {
  if (!node.is_seq())
    throw ParseError("stage '" + stage + "': '" + key + "' must be a list",
                     node.line);
  std::vector<std::string> out;
  for (const auto& item : node.seq) out.push_back(item.scalar);
  return out;
}

StageDef stage_from_block(const std::string& name, const BlockNode& node) {
  if (!node.is_map())
    throw ParseError("stage '" + name + "' must be a mapping", node.line);
  for (const auto& [key, value] : node.map) {
    bool known = std::any_of(std::begin(kStageKeys), std::end(kStageKeys),
                             [&](const char* k) { return key == k; });
    if (!known)
      throw ParseError("stage '" + name + "': unknown key '" + key + "'",
                       value.line);
  }

  StageDef s;
  s.name = name;
  const BlockNode* cmd = node.find("cmd");
  if (cmd == nullptr || !cmd->is_scalar())
    throw ParseError("stage '" + name + "' has no cmd", node.line);
  s.cmd = cmd->scalar;
  if (s.cmd.empty()) throw ParseError("stage '" + name + "': empty cmd", cmd->line);

  auto list = [&](const char* key) -> std::vector<std::string> {
    const BlockNode* n = node.find(key);
    if (n == nullptr) return {};
    return string_list(*n, name, key);
  };
  s.params = list("params");
  s.deps_path = list("deps_path");
  s.deps_attr = list("deps_attr");
  s.outs_path = list("outs_path");
  s.outs_attr = list("outs_attr");
  s.metrics = list("metrics");
  s.plots = list("plots");

  for (const auto& k : s.params) {
    if (!is_dotted_key(k))
      throw ValidationError("stage '" + name + "': bad param key '" + k + "'");
  }
  for (const auto* vec : {&s.deps_path, &s.outs_path, &s.plots}) {
    for (const auto& p : *vec) {
      if (!is_valid_path(p))
        throw ValidationError("stage '" + name + "': bad path '" + p + "'");
      if (is_reserved_path(p))
        throw ValidationError("stage '" + name + "': path under .dac/ is reserved: '" +
                              p + "'");
    }
  }
  for (const auto* vec : {&s.outs_attr, &s.metrics}) {
    for (const auto& a : *vec) {
      if (!is_identifier(a))
        throw ValidationError("stage '" + name + "': bad attribute name '" + a +
                              "'");
    }
  }
  for (const auto& ref : s.deps_attr) {
    std::size_t dot = ref.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= ref.size() ||
        !is_identifier(ref.substr(0, dot)) || !is_identifier(ref.substr(dot + 1)))
      throw ValidationError("stage '" + name + "': bad deps_attr '" + ref +
                            "' (want <stage>.<attr>)");
  }

  auto check_dups = [&](const std::vector<std::string>& v, const char* what) {
    std::vector<std::string> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end())
      throw ValidationError("stage '" + name + "': duplicate " +
                            std::string(what) + " '" + *dup + "'");
  };
  check_dups(s.params, "param");
  check_dups(s.deps_path, "deps_path");
  check_dups(s.deps_attr, "deps_attr");
  check_dups(s.outs_path, "outs_path");
  check_dups(s.outs_attr, "outs_attr");
  check_dups(s.metrics, "metric");
  check_dups(s.plots, "plot");
  return s;
}

void validate_pipeline(const PipelineDef& p) {
  // Single producer per output path (including plots and managed docs).
  std::map<std::string, std::string> producer;
  for (const auto& [name, s] : p.stages) {
    for (const auto& path : declared_output_paths(s)) {
      auto [it, inserted] = producer.try_emplace(path, name);
      if (!inserted)
        throw ValidationError("output path '" + path +
                              "' declared by both stage '" + it->second +
                              "' and stage '" + name + "'");
    }
  }
  // Attribute references must name an existing stage attribute.
  for (const auto& [name, s] : p.stages) {
    for (const auto& ref : s.deps_attr) {
      std::size_t dot = ref.find('.');
      std::string src = ref.substr(0, dot);
      std::string attr = ref.substr(dot + 1);
      auto it = p.stages.find(src);
      if (it == p.stages.end())
        throw ValidationError("stage '" + name + "': deps_attr '" + ref +
                              "' names unknown stage '" + src + "'");
      if (!it->second.has_out_attr(attr) && !it->second.has_metric(attr))
        throw ValidationError("stage '" + name + "': deps_attr '" + ref +
                              "' names no outs_attr/metric of stage '" + src +
                              "'");
    }
  }
}

}  // namespace

bool StageDef::has_out_attr(std::string_view a) const {
  return std::find(outs_attr.begin(), outs_attr.end(), a) != outs_attr.end();
}

bool StageDef::has_metric(std::string_view a) const {
  return std::find(metrics.begin(), metrics.end(), a) != metrics.end();
}

const StageDef& PipelineDef::stage(std::string_view name) const {
  auto it = stages.find(std::string(name));
  if (it == stages.end())
    throw NotFoundError("unknown stage: '" + std::string(name) + "'");
  return it->second;
}

std::string outs_doc_path(std::string_view stage) {
  return ".dac/nodes/" + std::string(stage) + "/outs.json";
}

std::string metrics_doc_path(std::string_view stage) {
  return ".dac/nodes/" + std::string(stage) + "/metrics.json";
}

std::vector<std::string> declared_output_paths(const StageDef& s) {
  std::vector<std::string> out = s.outs_path;
  out.insert(out.end(), s.plots.begin(), s.plots.end());
  if (!s.outs_attr.empty()) out.push_back(outs_doc_path(s.name));
  if (!s.metrics.empty()) out.push_back(metrics_doc_path(s.name));
  std::sort(out.begin(), out.end());
  return out;
}

PipelineDef parse_pipeline(std::string_view text) {
  BlockNode root = parse_block(text);
  for (const auto& [key, value] : root.map) {
    if (key != "stages")
      throw ParseError("unknown top-level key '" + key + "'", value.line);
  }
  PipelineDef p;
  const BlockNode* stages = root.find("stages");
  if (stages == nullptr) {
    if (root.map.empty()) return p;  // blank document: empty pipeline
    throw ParseError("missing 'stages' block", 0);
  }
  if (!stages->is_map()) throw ParseError("'stages' must be a mapping", stages->line);

  for (const auto& [name, body] : stages->map) {
    if (!is_identifier(name))
      throw ParseError("bad stage name '" + name + "'", body.line);
    p.stages.emplace(name, stage_from_block(name, body));
  }
  validate_pipeline(p);
  return p;
}

std::string emit_pipeline(const PipelineDef& p) {
  BlockNode root = BlockNode::make_map();
  BlockNode stages = BlockNode::make_map();
  for (const auto& [name, s] : p.stages) {
    BlockNode body = BlockNode::make_map();
    body.add("cmd", BlockNode::make_scalar(s.cmd));
    auto add_list = [&body](const char* key, const std::vector<std::string>& v) {
      if (v.empty()) return;
      BlockNode seq = BlockNode::make_seq();
      for (const auto& item : v) seq.add_item(BlockNode::make_scalar(item));
      body.add(key, std::move(seq));
    };
    add_list("params", s.params);
    add_list("deps_path", s.deps_path);
    add_list("deps_attr", s.deps_attr);
    add_list("outs_path", s.outs_path);
    add_list("outs_attr", s.outs_attr);
    add_list("metrics", s.metrics);
    add_list("plots", s.plots);
    stages.add(name, std::move(body));
  }
  root.add("stages", std::move(stages));
  return emit_block(root);
}

}  // namespace dac
