#include "psgkit/resources.hpp"

#include <array>
#include <utility>

#include <openssl/sha.h>

#include "psgkit/errors.hpp"

namespace psgkit {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kResources[];
extern const std::size_t kResourceCount;
}  // namespace detail

std::string_view resource(std::string_view name) {
  for (std::size_t i = 0; i < detail::kResourceCount; ++i) {
    if (detail::kResources[i].first == name) return detail::kResources[i].second;
  }
  throw Error("resource", "no bundled resource named \"" + std::string(name) + "\"");
}

std::vector<std::string_view> resource_names() {
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < detail::kResourceCount; ++i) out.push_back(detail::kResources[i].first);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char b : digest) {
    out += kHex[b >> 4];
    out += kHex[b & 0xf];
  }
  return out;
}

}  // namespace psgkit
