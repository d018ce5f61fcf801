#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace turtledb {

// FNV-1a, 64-bit. Used for WAL/manifest content hashes and key scrambling.
inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = kFnvOffsetBasis)
{
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s)
{
  return fnv1a64(s.data(), s.size());
}

inline uint64_t fnv1a64_u64(uint64_t v)
{
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<unsigned char>(v >> (i * 8));
  }
  return fnv1a64(buf, sizeof(buf));
}

// splitmix64 finalizer; bijective on u64, used to scramble key numbers into
// uniformly distributed byte keys.
inline uint64_t mix64(uint64_t x)
{
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace turtledb
