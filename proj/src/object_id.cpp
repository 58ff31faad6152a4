#include "dac/object_id.hpp"

#include "dac/errors.hpp"
#include "dac/sha256.hpp"

namespace dac {
namespace {

bool is_hex_digest(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

ObjectId ObjectId::from_hex(std::string_view hex) {
  if (!is_hex_digest(hex))
    throw ValidationError("not a valid object id: '" + std::string(hex) + "'");
  return ObjectId(std::string(hex));
}

std::optional<ObjectId> ObjectId::try_from_hex(std::string_view hex) {
  if (!is_hex_digest(hex)) return std::nullopt;
  return ObjectId(std::string(hex));
}

ObjectId ObjectId::of_bytes(std::string_view data) {
  return ObjectId(sha256_hex(data));
}

}  // namespace dac
