#pragma once

#include <cstdint>
#include <string_view>

namespace protochaos {

// FNV-1a, 64-bit. Used for dataset digests in run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace protochaos
