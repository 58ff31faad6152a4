#include "dac/lockfile.hpp"

#include "dac/blocktext.hpp"
#include "dac/errors.hpp"
#include "dac/object_id.hpp"

namespace dac {
namespace {

std::string require_hex(const BlockNode& node, const std::string& what) {
  if (!node.is_scalar())
    throw ParseError(what + " must be an object id", node.line);
  ObjectId::from_hex(node.scalar);  // validates
  return node.scalar;
}

std::map<std::string, std::string> hex_map(const BlockNode* node,
                                           const std::string& what) {
  std::map<std::string, std::string> out;
  if (node == nullptr) return out;
  if (!node->is_map()) throw ParseError(what + " must be a mapping", node->line);
  for (const auto& [key, value] : node->map)
    out.emplace(key, require_hex(value, what + " entry '" + key + "'"));
  return out;
}

BlockNode block_from_hex_map(const std::map<std::string, std::string>& m) {
  BlockNode node = BlockNode::make_map();
  for (const auto& [key, hex] : m)
    node.add(key, BlockNode::make_scalar(hex));
  return node;
}

}  // namespace

const StageLock* LockFile::find(std::string_view stage) const {
  auto it = stages.find(std::string(stage));
  return it == stages.end() ? nullptr : &it->second;
}

LockFile parse_lock(std::string_view text) {
  BlockNode root = parse_block(text);
  for (const auto& [key, value] : root.map) {
    if (key != "stages")
      throw ParseError("unknown top-level key '" + key + "'", value.line);
  }
  LockFile lock;
  const BlockNode* stages = root.find("stages");
  if (stages == nullptr) return lock;
  if (!stages->is_map())
    throw ParseError("'stages' must be a mapping", stages->line);

  for (const auto& [name, body] : stages->map) {
    if (!body.is_map())
      throw ParseError("lock entry '" + name + "' must be a mapping", body.line);
    for (const auto& [key, value] : body.map) {
      if (key != "fingerprint" && key != "deps" && key != "outs")
        throw ParseError("lock entry '" + name + "': unknown key '" + key + "'",
                         value.line);
    }
    StageLock s;
    const BlockNode* fp = body.find("fingerprint");
    if (fp == nullptr)
      throw ParseError("lock entry '" + name + "' has no fingerprint", body.line);
    s.fingerprint = require_hex(*fp, "fingerprint of '" + name + "'");
    s.deps = hex_map(body.find("deps"), "deps of '" + name + "'");
    s.outs = hex_map(body.find("outs"), "outs of '" + name + "'");
    lock.stages.emplace(name, std::move(s));
  }
  return lock;
}

std::string emit_lock(const LockFile& lock) {
  BlockNode root = BlockNode::make_map();
  BlockNode stages = BlockNode::make_map();
  for (const auto& [name, s] : lock.stages) {
    BlockNode body = BlockNode::make_map();
    body.add("fingerprint", BlockNode::make_scalar(s.fingerprint));
    body.add("deps", block_from_hex_map(s.deps));
    body.add("outs", block_from_hex_map(s.outs));
    stages.add(name, std::move(body));
  }
  root.add("stages", std::move(stages));
  return emit_block(root);
}

std::string emit_outs_entry(const std::map<std::string, std::string>& outs) {
  BlockNode root = BlockNode::make_map();
  root.add("outs", block_from_hex_map(outs));
  return emit_block(root);
}

std::map<std::string, std::string> parse_outs_entry(std::string_view text) {
  BlockNode root = parse_block(text);
  return hex_map(root.find("outs"), "outs");
}

bool is_attr_dep(std::string_view dep_name) {
  return dep_name.rfind(kAttrDepPrefix, 0) == 0;
}

bool is_param_dep(std::string_view dep_name) {
  return dep_name.rfind(kParamDepPrefix, 0) == 0;
}

bool is_path_dep(std::string_view dep_name) {
  return !is_attr_dep(dep_name) && !is_param_dep(dep_name);
}

}  // namespace dac
