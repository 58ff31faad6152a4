#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace dac {

// Content hash identifying an immutable blob: 64 lowercase hex chars
// (SHA-256 of the blob bytes). Equal ids imply byte-identical content.
class ObjectId {
 public:
  // Parses and validates a 64-char lowercase hex digest; throws
  // ValidationError otherwise.
  static ObjectId from_hex(std::string_view hex);
  static std::optional<ObjectId> try_from_hex(std::string_view hex);

  // Digest of a byte string.
  static ObjectId of_bytes(std::string_view data);

  const std::string& hex() const { return hex_; }

  // First two hex chars: the shard directory in the object store layout.
  std::string_view shard() const { return std::string_view(hex_).substr(0, 2); }
  std::string_view rest() const { return std::string_view(hex_).substr(2); }

  auto operator<=>(const ObjectId&) const = default;

 private:
  explicit ObjectId(std::string hex) : hex_(std::move(hex)) {}
  std::string hex_;
};

}  // namespace dac
