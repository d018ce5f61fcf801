#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace turtledb {

// Little-endian fixed-width encode/decode helpers for on-disk structures.

inline void put_u16(std::string& dst, uint16_t v)
{
  char buf[2];
  buf[0] = static_cast<char>(v);
  buf[1] = static_cast<char>(v >> 8);
  dst.append(buf, 2);
}

inline void put_u32(std::string& dst, uint32_t v)
{
  char buf[4];
  for (int i = 0; i < 4; ++i) {
    buf[i] = static_cast<char>(v >> (i * 8));
  }
  dst.append(buf, 4);
}

inline void put_u64(std::string& dst, uint64_t v)
{
  char buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<char>(v >> (i * 8));
  }
  dst.append(buf, 8);
}

inline uint16_t get_u16(const char* p)
{
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<uint16_t>(u[0] | (u[1] << 8));
}

inline uint32_t get_u32(const char* p)
{
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<uint32_t>(u[0]) | (static_cast<uint32_t>(u[1]) << 8) |
         (static_cast<uint32_t>(u[2]) << 16) | (static_cast<uint32_t>(u[3]) << 24);
}

inline uint64_t get_u64(const char* p)
{
  uint64_t v = 0;
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | u[i];
  }
  return v;
}

inline void encode_u32_at(std::string& dst, size_t offset, uint32_t v)
{
  for (int i = 0; i < 4; ++i) {
    dst[offset + i] = static_cast<char>(v >> (i * 8));
  }
}

inline void encode_u64_at(std::string& dst, size_t offset, uint64_t v)
{
  for (int i = 0; i < 8; ++i) {
    dst[offset + i] = static_cast<char>(v >> (i * 8));
  }
}

}  // namespace turtledb
