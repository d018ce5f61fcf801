#pragma once

#include <turtledb/core/types.hpp>

#include <atomic>
#include <cstring>

namespace turtledb {

// Storage pools, one per page size, plus the log files.
enum class PoolKind : u32 {
  kNode = 0,
  kLeaf = 1,
  kFilter = 2,
  kWal = 3,
  kManifest = 4,
};
inline constexpr u32 kPoolKindCount = 5;

// Monotone instrumentation counters, incrementable from any thread.
struct StatsCounters {
  std::atomic<u64> user_bytes_in{0};
  std::atomic<u64> n_keys{0};  // total updates ingested
  std::atomic<u64> pages_written[kPoolKindCount] = {};
  std::atomic<u64> bytes_written[kPoolKindCount] = {};
  std::atomic<u64> pages_read{0};
  std::atomic<u64> shard_reads{0};
  std::atomic<u64> shard_bytes_read[kPoolKindCount] = {};
  std::atomic<u64> filter_negative_hits{0};
  std::atomic<u64> cache_hits{0};
  std::atomic<u64> cache_misses{0};

  void add_page_write(PoolKind pool, u64 bytes)
  {
    pages_written[static_cast<u32>(pool)].fetch_add(1, std::memory_order_relaxed);
    bytes_written[static_cast<u32>(pool)].fetch_add(bytes, std::memory_order_relaxed);
  }

  void add_log_write(PoolKind pool, u64 bytes)
  {
    bytes_written[static_cast<u32>(pool)].fetch_add(bytes, std::memory_order_relaxed);
  }

  u64 total_bytes_written() const
  {
    u64 total = 0;
    for (u32 i = 0; i < kPoolKindCount; ++i) {
      total += bytes_written[i].load(std::memory_order_relaxed);
    }
    return total;
  }

  u64 total_pool_pages_written() const
  {
    u64 total = 0;
    for (u32 i = 0; i <= static_cast<u32>(PoolKind::kFilter); ++i) {
      total += pages_written[i].load(std::memory_order_relaxed);
    }
    return total;
  }
};

// Point-in-time copy of the counters plus derived metrics.
struct StatsSnapshot {
  u64 user_bytes_in = 0;
  u64 n_keys = 0;
  u64 pages_written[kPoolKindCount] = {};
  u64 bytes_written[kPoolKindCount] = {};
  u64 pages_read = 0;
  u64 shard_reads = 0;
  u64 shard_bytes_read[kPoolKindCount] = {};
  u64 filter_negative_hits = 0;
  u64 cache_hits = 0;
  u64 cache_misses = 0;

  double write_amplification = 0.0;
  bool write_amp_defined = false;  // false while user_bytes_in == 0

  double space_amplification = 0.0;
  bool space_amp_defined = false;
  u64 disk_bytes = 0;
  u64 logical_live_bytes = 0;

  u64 total_bytes_written() const
  {
    u64 t = 0;
    for (u32 i = 0; i < kPoolKindCount; ++i) {
      t += bytes_written[i];
    }
    return t;
  }

  u64 total_pool_pages_written() const
  {
    u64 t = 0;
    for (u32 i = 0; i <= static_cast<u32>(PoolKind::kFilter); ++i) {
      t += pages_written[i];
    }
    return t;
  }

  static StatsSnapshot take(const StatsCounters& c)
  {
    StatsSnapshot s;
    s.user_bytes_in = c.user_bytes_in.load(std::memory_order_relaxed);
    s.n_keys = c.n_keys.load(std::memory_order_relaxed);
    for (u32 i = 0; i < kPoolKindCount; ++i) {
      s.pages_written[i] = c.pages_written[i].load(std::memory_order_relaxed);
      s.bytes_written[i] = c.bytes_written[i].load(std::memory_order_relaxed);
      s.shard_bytes_read[i] = c.shard_bytes_read[i].load(std::memory_order_relaxed);
    }
    s.pages_read = c.pages_read.load(std::memory_order_relaxed);
    s.shard_reads = c.shard_reads.load(std::memory_order_relaxed);
    s.filter_negative_hits = c.filter_negative_hits.load(std::memory_order_relaxed);
    s.cache_hits = c.cache_hits.load(std::memory_order_relaxed);
    s.cache_misses = c.cache_misses.load(std::memory_order_relaxed);
    if (s.user_bytes_in > 0) {
      s.write_amp_defined = true;
      s.write_amplification = static_cast<double>(s.total_bytes_written()) / static_cast<double>(s.user_bytes_in);
    }
    return s;
  }
};

}  // namespace turtledb
