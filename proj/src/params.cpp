#include "dac/params.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "dac/blocktext.hpp"
#include "dac/errors.hpp"

namespace dac {
namespace {

bool looks_like_int(std::string_view t) {
  std::size_t i = (t.size() > 0 && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
  if (i >= t.size()) return false;
  for (; i < t.size(); ++i)
    if (t[i] < '0' || t[i] > '9') return false;
  return true;
}

bool looks_like_float(std::string_view t) {
  std::size_t i = (t.size() > 0 && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
  bool digits = false, dot = false, exp = false, exp_digits = false;
  for (; i < t.size(); ++i) {
    char c = t[i];
    if (c >= '0' && c <= '9') {
      (exp ? exp_digits : digits) = true;
    } else if (c == '.' && !dot && !exp) {
      dot = true;
    } else if ((c == 'e' || c == 'E') && !exp && digits) {
      exp = true;
      if (i + 1 < t.size() && (t[i + 1] == '+' || t[i + 1] == '-')) ++i;
    } else {
      return false;
    }
  }
  if (!digits) return false;
  if (exp && !exp_digits) return false;
  return dot || exp;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::int64_t parse_int(std::string_view t) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError("integer out of range: '" + std::string(t) + "'", 0);
  return out;
}

double parse_float(std::string_view t) {
  std::string buf(t);
  errno = 0;
  char* end = nullptr;
  double out = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE)
    throw ParseError("bad float literal: '" + buf + "'", 0);
  return out;
}

ParamMap map_from_block(const BlockNode& node);

ParamNode node_from_block(const BlockNode& node) {
  if (node.is_map()) return ParamNode{map_from_block(node)};
  if (node.is_seq())
    throw ParseError("sequences are not allowed in params", node.line);
  if (node.quoted) return ParamNode{ParamScalar(node.scalar)};
  return ParamNode{scalar_from_literal(node.scalar)};
}

ParamMap map_from_block(const BlockNode& node) {
  ParamMap out;
  for (const auto& [key, value] : node.map) {
    if (!is_identifier(key))
      throw ParseError("bad param key '" + key + "'", value.line);
    out.emplace(key, node_from_block(value));
  }
  return out;
}

BlockNode block_from_map(const ParamMap& map);

BlockNode block_from_scalar(const ParamScalar& v) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    // Quote strings that a re-parse would type as something else.
    bool confusable = s->empty() || *s == "true" || *s == "false" ||
                      looks_like_int(*s) || looks_like_float(*s);
    return BlockNode::make_scalar(*s, confusable);
  }
  return BlockNode::make_scalar(canonical_scalar(v), false);
}

BlockNode block_from_map(const ParamMap& map) {
  BlockNode out = BlockNode::make_map();
  for (const auto& [key, node] : map) {
    if (node.is_scalar()) {
      out.add(key, block_from_scalar(node.scalar()));
    } else {
      out.add(key, block_from_map(node.children()));
    }
  }
  return out;
}

std::vector<std::string_view> split_dotted(std::string_view dotted) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos <= dotted.size()) {
    std::size_t dot = dotted.find('.', pos);
    if (dot == std::string_view::npos) {
      parts.push_back(dotted.substr(pos));
      break;
    }
    parts.push_back(dotted.substr(pos, dot - pos));
    pos = dot + 1;
  }
  return parts;
}

}  // namespace

std::string canonical_scalar(const ParamScalar& v) {
  return std::visit(
      [](const auto& x) { return nlohmann::json(x).dump(); }, v);
}

ParamScalar scalar_from_literal(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  if (looks_like_int(text)) return parse_int(text);
  if (looks_like_float(text)) return parse_float(text);
  return std::string(text);
}

ParamTree ParamTree::parse(std::string_view text) {
  ParamTree tree;
  tree.root_ = map_from_block(parse_block(text));
  return tree;
}

std::string ParamTree::emit() const {
  return emit_block(block_from_map(root_));
}

bool ParamTree::has(std::string_view dotted) const {
  const ParamMap* level = &root_;
  auto parts = split_dotted(dotted);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto it = level->find(std::string(parts[i]));
    if (it == level->end()) return false;
    if (i + 1 == parts.size()) return it->second.is_scalar();
    if (it->second.is_scalar()) return false;
    level = &it->second.children();
  }
  return false;
}

const ParamScalar& ParamTree::at(std::string_view dotted) const {
  const ParamMap* level = &root_;
  auto parts = split_dotted(dotted);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto it = level->find(std::string(parts[i]));
    if (it == level->end())
      throw NotFoundError("param key missing: '" + std::string(dotted) + "'");
    if (i + 1 == parts.size()) {
      if (!it->second.is_scalar())
        throw NotFoundError("param key is not a scalar: '" +
                            std::string(dotted) + "'");
      return it->second.scalar();
    }
    if (it->second.is_scalar())
      throw NotFoundError("param key missing: '" + std::string(dotted) + "'");
    level = &it->second.children();
  }
  throw NotFoundError("param key missing: '" + std::string(dotted) + "'");
}

void ParamTree::set_existing(std::string_view dotted, ParamScalar v) {
  if (!has(dotted))
    throw NotFoundError("param key missing: '" + std::string(dotted) + "'");
  set(dotted, std::move(v));
}

void ParamTree::set(std::string_view dotted, ParamScalar v) {
  ParamMap* level = &root_;
  auto parts = split_dotted(dotted);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    auto [it, inserted] =
        level->try_emplace(std::string(parts[i]), ParamNode{ParamMap{}});
    if (it->second.is_scalar())
      it->second.value = ParamMap{};
    level = &std::get<ParamMap>(it->second.value);
  }
  (*level)[std::string(parts.back())] = ParamNode{std::move(v)};
}

OverrideSpec parse_set_override(std::string_view spec) {
  std::size_t eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ParseError("override must be key=value[,value...]: '" +
                         std::string(spec) + "'",
                     0);
  OverrideSpec out;
  out.key = std::string(trim(spec.substr(0, eq)));
  if (!is_dotted_key(out.key))
    throw ParseError("bad override key: '" + out.key + "'", 0);

  std::string_view rhs = trim(spec.substr(eq + 1));
  if (rhs.empty()) throw ParseError("override has no values", 0);

  if (rhs.rfind("range(", 0) == 0) {
    if (rhs.back() != ')')
      throw ParseError("malformed range: '" + std::string(rhs) + "'", 0);
    std::string_view args = rhs.substr(6, rhs.size() - 7);
    std::vector<std::int64_t> parts;
    std::size_t pos = 0;
    while (pos <= args.size()) {
      std::size_t comma = args.find(',', pos);
      std::string_view tok =
          trim(comma == std::string_view::npos ? args.substr(pos)
                                               : args.substr(pos, comma - pos));
      if (!looks_like_int(tok))
        throw ParseError("range arguments must be integers: '" +
                             std::string(rhs) + "'",
                         0);
      parts.push_back(parse_int(tok));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (parts.size() < 2 || parts.size() > 3)
      throw ParseError("range takes 2 or 3 arguments", 0);
    std::int64_t start = parts[0], stop = parts[1];
    std::int64_t step = parts.size() == 3 ? parts[2] : 1;
    if (step == 0) throw ParseError("range step must not be zero", 0);
    for (std::int64_t v = start; step > 0 ? v < stop : v > stop; v += step)
      out.values.emplace_back(v);
    if (out.values.empty())
      throw ParseError("empty range: '" + std::string(rhs) + "'", 0);
    return out;
  }

  std::size_t pos = 0;
  while (pos <= rhs.size()) {
    std::size_t comma = rhs.find(',', pos);
    std::string_view tok =
        trim(comma == std::string_view::npos ? rhs.substr(pos)
                                             : rhs.substr(pos, comma - pos));
    if (tok.empty()) throw ParseError("empty override value", 0);
    out.values.push_back(scalar_from_literal(tok));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  char c0 = s[0];
  if (!((c0 >= 'A' && c0 <= 'Z') || (c0 >= 'a' && c0 <= 'z') || c0 == '_'))
    return false;
  for (char c : s.substr(1)) {
    if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
          (c >= '0' && c <= '9') || c == '_' || c == '-'))
      return false;
  }
  return true;
}

bool is_dotted_key(std::string_view s) {
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = s.find('.', pos);
    std::string_view part =
        dot == std::string_view::npos ? s.substr(pos) : s.substr(pos, dot - pos);
    if (!is_identifier(part)) return false;
    if (dot == std::string_view::npos) return true;
    pos = dot + 1;
  }
}

}  // namespace dac
