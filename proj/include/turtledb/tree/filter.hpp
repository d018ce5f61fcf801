#pragma once

#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace turtledb {

// Blocked Bloom filter, one per leaf page. 64-byte blocks, double hashing
// within the block. No false negatives; false-positive rate tracks
// bits_per_key (~10 bpk for 1% alpha). An empty filter rejects everything.

inline constexpr u32 kFilterMagic = 0x46494c31;  // "FIL1"
inline constexpr u32 kFilterHeaderBytes = 24;
inline constexpr u32 kFilterBlockBytes = 64;

std::string build_filter_page(const std::vector<std::string_view>& keys, u32 bits_per_key, u64 page_bytes);

class FilterView
{
 public:
  static StatusOr<FilterView> parse(std::string_view page);

  bool may_contain(std::string_view key) const;
  u32 key_count() const { return key_count_; }

 private:
  std::string_view blocks_;
  u32 key_count_ = 0;
  u32 block_count_ = 0;
  u32 probes_ = 0;
};

}  // namespace turtledb
