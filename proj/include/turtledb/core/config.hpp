#pragma once

#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>

#include <cmath>
#include <string>

namespace turtledb {

// Store configuration. Structural parameters (page sizes, pivot capacity,
// filter shape) are persisted in the CONFIG file and must match on reopen.
// Runtime knobs (chi, memory budget, threads, polling) are not persisted.
struct Config {
  // --- structural (persisted) ---
  u64 node_page_bytes = 4 * 1024;
  u64 leaf_page_bytes = 64 * 1024;   // L
  u64 filter_page_bytes = 8 * 1024;
  u64 block_bytes = 4 * 1024;        // shard / cache granularity
  u32 pivot_capacity = 16;           // rho
  u32 level_fanout = 2;              // F; fixed
  u32 filter_bits_per_key = 0;       // 0 = derive from filter_fp_rate
  double filter_fp_rate = 0.01;      // alpha
  u64 wal_block_bytes = 64 * 1024;

  // --- runtime (not persisted) ---
  u32 chi = 1;                        // checkpoint distance
  u64 memory_budget_bytes = 64ull * 1024 * 1024;
  u32 worker_threads = 0;             // extra build threads at externalize
  u64 wal_poll_micros = 1000;
  u64 memtable_bytes = 0;             // 0 = leaf_page_bytes

  Status validate() const;

  u32 buffer_levels() const
  {
    u32 levels = 0;
    while ((1u << levels) < pivot_capacity) {
      ++levels;
    }
    return levels == 0 ? 1 : levels;
  }

  // Per-level segment caps: level i holds at most 2^i segments, with the
  // last level clamped so the whole buffer never exceeds rho - 1 segments.
  u32 level_segment_cap(u32 level) const
  {
    const u32 levels = buffer_levels();
    if (level + 1 < levels) {
      return 1u << level;
    }
    return pivot_capacity - (1u << (levels - 1));
  }

  u32 max_buffer_segments() const { return pivot_capacity - 1; }

  u64 max_buffered_bytes() const { return leaf_page_bytes * (pivot_capacity - 1); }

  u64 max_value_bytes() const { return leaf_page_bytes / 8; }

  u64 memtable_threshold_bytes() const { return memtable_bytes != 0 ? memtable_bytes : leaf_page_bytes; }

  u32 effective_filter_bits_per_key() const
  {
    if (filter_bits_per_key != 0) {
      return filter_bits_per_key;
    }
    // Standard Bloom sizing: bits/key = log2(1/alpha) / ln 2.
    const double bpk = std::log2(1.0 / filter_fp_rate) / 0.6931471805599453;
    return static_cast<u32>(std::ceil(bpk)) + 1;
  }

  std::string to_json() const;
  static StatusOr<Config> from_json(const std::string& text);

  // Structural equality (the persisted subset).
  bool structurally_equal(const Config& other) const
  {
    return node_page_bytes == other.node_page_bytes && leaf_page_bytes == other.leaf_page_bytes &&
           filter_page_bytes == other.filter_page_bytes && block_bytes == other.block_bytes &&
           pivot_capacity == other.pivot_capacity && level_fanout == other.level_fanout &&
           filter_bits_per_key == other.filter_bits_per_key && filter_fp_rate == other.filter_fp_rate &&
           wal_block_bytes == other.wal_block_bytes;
  }
};

}  // namespace turtledb
