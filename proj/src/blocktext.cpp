#include "dac/blocktext.hpp"

#include <algorithm>

#include "dac/errors.hpp"

namespace dac {
namespace {

struct Line {
  std::size_t indent;
  std::string_view content;  // without indent, without trailing '\r'
  std::size_t number;        // 1-based
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  std::size_t number = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    std::size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    if (indent < raw.size() && raw[indent] == '\t')
      throw ParseError("tab character in indentation", number);
    std::string_view content = raw.substr(indent);
    if (content.empty() || content.front() == '#') continue;
    lines.push_back({indent, content, number});
  }
  return lines;
}

// Parses a JSON-style double-quoted string occupying the whole token.
std::string unquote(std::string_view s, std::size_t line) {
  if (s.size() < 2 || s.front() != '"')
    throw ParseError("malformed quoted string", line);
  std::string out;
  std::size_t i = 1;
  for (;;) {
    if (i >= s.size()) throw ParseError("unterminated quoted string", line);
    char c = s[i];
    if (c == '"') {
      ++i;
      break;
    }
    if (c != '\\') {
      out.push_back(c);
      ++i;
      continue;
    }
    if (i + 1 >= s.size()) throw ParseError("dangling escape", line);
    char e = s[i + 1];
    i += 2;
    switch (e) {
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'u': {
        if (i + 4 > s.size()) throw ParseError("bad \\u escape", line);
        unsigned code = 0;
        for (int k = 0; k < 4; ++k) {
          char h = s[i + std::size_t(k)];
          code <<= 4;
          if (h >= '0' && h <= '9') code |= unsigned(h - '0');
          else if (h >= 'a' && h <= 'f') code |= unsigned(h - 'a' + 10);
          else if (h >= 'A' && h <= 'F') code |= unsigned(h - 'A' + 10);
          else throw ParseError("bad \\u escape", line);
        }
        i += 4;
        if (code > 0x7f) throw ParseError("non-ASCII \\u escape unsupported", line);
        out.push_back(char(code));
        break;
      }
      default:
        throw ParseError("unknown escape '\\" + std::string(1, e) + "'", line);
    }
  }
  if (i != s.size())
    throw ParseError("trailing characters after quoted string", line);
  return out;
}

BlockNode scalar_from_token(std::string_view token, std::size_t line) {
  if (!token.empty() && token.front() == '"') {
    BlockNode n = BlockNode::make_scalar(unquote(token, line), true);
    n.line = line;
    return n;
  }
  BlockNode n = BlockNode::make_scalar(std::string(token), false);
  n.line = line;
  return n;
}

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  BlockNode parse_root() {
    if (lines_.empty()) {
      BlockNode root = BlockNode::make_map();
      return root;
    }
    if (lines_[0].indent != 0)
      throw ParseError("first entry must not be indented", lines_[0].number);
    BlockNode root = parse_value_block(0);
    if (i_ < lines_.size())
      throw ParseError("unexpected indent", lines_[i_].number);
    if (!root.is_map())
      throw ParseError("top level must be a mapping", lines_[0].number);
    return root;
  }

 private:
  BlockNode parse_value_block(std::size_t indent) {
    const Line& first = lines_[i_];
    if (first.content.rfind("- ", 0) == 0 || first.content == "-")
      return parse_seq(indent);
    return parse_map(indent);
  }

  BlockNode parse_map(std::size_t indent) {
    BlockNode node = BlockNode::make_map();
    node.line = lines_[i_].number;
    while (i_ < lines_.size()) {
      const Line& ln = lines_[i_];
      if (ln.indent < indent) break;
      if (ln.indent > indent)
        throw ParseError("unexpected indent", ln.number);
      if (ln.content.rfind("- ", 0) == 0 || ln.content == "-")
        throw ParseError("sequence item not allowed in mapping", ln.number);

      std::string_view content = ln.content;
      std::size_t sep = content.find(": ");
      std::string key;
      if (sep != std::string_view::npos) {
        key = std::string(content.substr(0, sep));
        validate_key(key, ln.number);
        std::string_view value = content.substr(sep + 2);
        while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        check_duplicate(node, key, ln.number);
        node.add(std::move(key), container_or_scalar(value, ln.number));
        ++i_;
      } else if (!content.empty() && content.back() == ':') {
        key = std::string(content.substr(0, content.size() - 1));
        validate_key(key, ln.number);
        check_duplicate(node, key, ln.number);
        std::size_t key_line = ln.number;
        ++i_;
        if (i_ >= lines_.size() || lines_[i_].indent <= indent)
          throw ParseError("missing value for key '" + key + "'", key_line);
        BlockNode child = parse_value_block(lines_[i_].indent);
        node.add(std::move(key), std::move(child));
      } else {
        throw ParseError("expected 'key: value'", ln.number);
      }
    }
    return node;
  }

  BlockNode parse_seq(std::size_t indent) {
    BlockNode node = BlockNode::make_seq();
    node.line = lines_[i_].number;
    while (i_ < lines_.size()) {
      const Line& ln = lines_[i_];
      if (ln.indent < indent) break;
      if (ln.indent > indent)
        throw ParseError("unexpected indent", ln.number);
      if (ln.content == "-")
        throw ParseError("empty sequence item", ln.number);
      if (ln.content.rfind("- ", 0) != 0)
        throw ParseError("expected '- item'", ln.number);
      std::string_view value = ln.content.substr(2);
      while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
      if (value.empty())
        throw ParseError("empty sequence item", ln.number);
      node.add_item(scalar_from_token(value, ln.number));
      ++i_;
    }
    return node;
  }

  BlockNode container_or_scalar(std::string_view value, std::size_t line) {
    if (value == "{}") {
      BlockNode n = BlockNode::make_map();
      n.line = line;
      return n;
    }
    if (value == "[]") {
      BlockNode n = BlockNode::make_seq();
      n.line = line;
      return n;
    }
    if (value.empty())
      throw ParseError("missing value after ': '", line);
    return scalar_from_token(value, line);
  }

  static void validate_key(const std::string& key, std::size_t line) {
    if (key.empty()) throw ParseError("empty key", line);
    if (key.front() == ' ' || key.back() == ' ')
      throw ParseError("key has surrounding whitespace", line);
    if (key.front() == '"' || key.front() == '#' || key.front() == '-')
      throw ParseError("key starts with reserved character", line);
  }

  static void check_duplicate(const BlockNode& map, const std::string& key,
                              std::size_t line) {
    if (map.find(key) != nullptr)
      throw ParseError("duplicate key '" + key + "'", line);
  }

  std::vector<Line> lines_;
  std::size_t i_ = 0;
};

bool scalar_needs_quote(const std::string& t) {
  if (t.empty()) return true;
  if (t.front() == ' ' || t.back() == ' ') return true;
  if (t.front() == '"') return true;
  if (t == "{}" || t == "[]") return true;
  return t.find('\n') != std::string::npos || t.find('\r') != std::string::npos;
}

void emit_node(const BlockNode& node, std::size_t indent, std::string& out);

void emit_scalar(const BlockNode& node, std::string& out) {
  if (node.quoted || scalar_needs_quote(node.scalar)) {
    out += quote_string(node.scalar);
  } else {
    out += node.scalar;
  }
}

void emit_map(const BlockNode& node, std::size_t indent, std::string& out) {
  std::string pad(indent, ' ');
  for (const auto& [key, value] : node.map) {
    out += pad;
    out += key;
    if (value.is_scalar()) {
      out += ": ";
      emit_scalar(value, out);
      out += '\n';
    } else if (value.is_map() && value.map.empty()) {
      out += ": {}\n";
    } else if (value.is_seq() && value.seq.empty()) {
      out += ": []\n";
    } else {
      out += ":\n";
      emit_node(value, indent + 2, out);
    }
  }
}

void emit_seq(const BlockNode& node, std::size_t indent, std::string& out) {
  std::string pad(indent, ' ');
  for (const auto& item : node.seq) {
    if (!item.is_scalar())
      throw DacError("internal: only scalar sequence items are emittable");
    out += pad;
    out += "- ";
    emit_scalar(item, out);
    out += '\n';
  }
}

void emit_node(const BlockNode& node, std::size_t indent, std::string& out) {
  if (node.is_map()) {
    emit_map(node, indent, out);
  } else if (node.is_seq()) {
    emit_seq(node, indent, out);
  } else {
    throw DacError("internal: scalar at block level");
  }
}

}  // namespace

BlockNode BlockNode::make_scalar(std::string text, bool quoted) {
  BlockNode n;
  n.kind = Kind::kScalar;
  n.scalar = std::move(text);
  n.quoted = quoted;
  return n;
}

BlockNode BlockNode::make_map() {
  BlockNode n;
  n.kind = Kind::kMap;
  return n;
}

BlockNode BlockNode::make_seq() {
  BlockNode n;
  n.kind = Kind::kSeq;
  return n;
}

const BlockNode* BlockNode::find(std::string_view key) const {
  for (const auto& [k, v] : map) {
    if (k == key) return &v;
  }
  return nullptr;
}

void BlockNode::add(std::string key, BlockNode value) {
  map.emplace_back(std::move(key), std::move(value));
}

void BlockNode::add_item(BlockNode value) { seq.push_back(std::move(value)); }

BlockNode parse_block(std::string_view text) {
  Parser p(split_lines(text));
  return p.parse_root();
}

std::string emit_block(const BlockNode& root) {
  if (!root.is_map()) throw DacError("internal: document root must be a map");
  std::string out;
  emit_node(root, 0, out);
  return out;
}

std::string quote_string(std::string_view raw) {
  std::string out = "\"";
  for (char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          static const char* hexd = "0123456789abcdef";
          out += "\\u00";
          out += hexd[(c >> 4) & 0xf];
          out += hexd[c & 0xf];
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

}  // namespace dac
