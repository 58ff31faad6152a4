#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dac {

// Typed scalar value of a parameter. Typing follows the literal form:
// true/false, integer, float, otherwise string (quoted strings are always
// strings).
using ParamScalar = std::variant<bool, std::int64_t, double, std::string>;

// Canonical JSON-style rendering (used in fingerprints, experiment
// records, and listings). Independent of incidental file whitespace.
std::string canonical_scalar(const ParamScalar& v);

// Typed scalar from a bare literal token.
ParamScalar scalar_from_literal(std::string_view text);

struct ParamNode;
using ParamMap = std::map<std::string, ParamNode>;

struct ParamNode {
  std::variant<ParamScalar, ParamMap> value;

  bool is_scalar() const { return value.index() == 0; }
  const ParamScalar& scalar() const { return std::get<0>(value); }
  const ParamMap& children() const { return std::get<1>(value); }
};

// Nested mapping of parameter keys to typed scalars. Dotted keys `a.b.c`
// resolve through the nesting.
class ParamTree {
 public:
  static ParamTree parse(std::string_view text);

  // Canonical emission: keys sorted, scalars rendered canonically,
  // ambiguous strings quoted.
  std::string emit() const;

  bool has(std::string_view dotted) const;
  const ParamScalar& at(std::string_view dotted) const;  // throws NotFoundError

  // Replaces the scalar at an existing dotted key; throws NotFoundError
  // when the key does not resolve to a scalar.
  void set_existing(std::string_view dotted, ParamScalar v);

  // Inserts (creating intermediate levels) — used when building trees
  // programmatically.
  void set(std::string_view dotted, ParamScalar v);

  bool empty() const { return root_.empty(); }
  const ParamMap& root() const { return root_; }

 private:
  ParamMap root_;
};

// One `-S key=v1,v2,...` override specification expanded to its typed
// value list. `range(a,b[,c])` expands to the half-open integer range.
struct OverrideSpec {
  std::string key;
  std::vector<ParamScalar> values;
};

OverrideSpec parse_set_override(std::string_view spec);

// Identifier checks shared by the pipeline and params layers.
bool is_identifier(std::string_view s);   // [A-Za-z_][A-Za-z0-9_-]*
bool is_dotted_key(std::string_view s);   // identifier(.identifier)*

}  // namespace dac
