#pragma once

#include <turtledb/core/stats.hpp>
#include <turtledb/core/types.hpp>

namespace turtledb {

// Durable page identity: pool kind in the top byte (biased by one so the
// zero id is invalid in every pool), page index in the low 56 bits.
struct PageId {
  u64 v = 0;

  PageId() = default;
  explicit PageId(u64 raw) : v{raw} {}

  static PageId make(PoolKind pool, u64 index)
  {
    return PageId{((static_cast<u64>(pool) + 1) << 56) | (index & 0x00ffffffffffffffull)};
  }

  bool valid() const { return v != 0; }
  PoolKind pool() const { return static_cast<PoolKind>((v >> 56) - 1); }
  u64 index() const { return v & 0x00ffffffffffffffull; }

  bool operator==(const PageId& o) const { return v == o.v; }
  bool operator!=(const PageId& o) const { return v != o.v; }
  bool operator<(const PageId& o) const { return v < o.v; }
};

}  // namespace turtledb
