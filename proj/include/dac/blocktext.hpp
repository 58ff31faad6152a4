#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dac {

// A deliberately small block-style configuration format: nested mappings,
// sequences of scalars, scalar values. Two-space indent, LF endings, '#'
// comment lines. No anchors, no flow collections (except the literal `{}`
// and `[]` empty markers), no multi-document streams. The emitter is
// canonical, so emit(parse(emit(x))) == emit(x).
//
// Split rule for mapping lines: the key ends at the first ": " (or a
// trailing ':' that opens a nested block). Keys therefore must not contain
// ": "; values run to the end of the line verbatim. Scalars starting with
// a double quote are JSON-style quoted strings.
class BlockNode {
 public:
  enum class Kind { kScalar, kMap, kSeq };

  Kind kind = Kind::kMap;
  std::string scalar;   // kScalar payload (unescaped)
  bool quoted = false;  // scalar was (or must be) written quoted
  std::vector<std::pair<std::string, BlockNode>> map;  // kMap, ordered
  std::vector<BlockNode> seq;                          // kSeq
  std::size_t line = 0;  // 1-based source line, 0 when synthesized

  static BlockNode make_scalar(std::string text, bool quoted = false);
  static BlockNode make_map();
  static BlockNode make_seq();

  bool is_scalar() const { return kind == Kind::kScalar; }
  bool is_map() const { return kind == Kind::kMap; }
  bool is_seq() const { return kind == Kind::kSeq; }

  // Pointer to the value for key, or nullptr. Maps are small; linear scan.
  const BlockNode* find(std::string_view key) const;

  void add(std::string key, BlockNode value);
  void add_item(BlockNode value);
};

// Parses a document whose root is a mapping (an all-blank document yields
// an empty map). Throws ParseError with a line number on malformed input.
BlockNode parse_block(std::string_view text);

// Canonical emission of a root mapping: 2-space indent, LF endings, keys
// in the node's stored order.
std::string emit_block(const BlockNode& root);

// JSON-style string quoting used for scalars that need it.
std::string quote_string(std::string_view raw);

}  // namespace dac
