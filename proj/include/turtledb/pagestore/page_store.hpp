#pragma once

#include <turtledb/core/config.hpp>
#include <turtledb/core/stats.hpp>
#include <turtledb/core/status.hpp>
#include <turtledb/pagestore/page_cache.hpp>
#include <turtledb/pagestore/page_id.hpp>
#include <turtledb/util/env.hpp>

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace turtledb {

// One durable pool per page size plus the shared shard cache and the
// reference-count table that governs page lifetime. Refcounts are not
// persisted here; the checkpoint manifest re-derives them at open.
class PageStore
{
 public:
  struct Options {
    u64 node_page_bytes = 4096;
    u64 leaf_page_bytes = 64 * 1024;
    u64 filter_page_bytes = 8 * 1024;
    u64 shard_bytes = 4096;
    u64 cache_budget_bytes = 64ull * 1024 * 1024;
    u64 max_pages_per_pool = 1ull << 20;

    static Options from_config(const Config& cfg)
    {
      Options o;
      o.node_page_bytes = cfg.node_page_bytes;
      o.leaf_page_bytes = cfg.leaf_page_bytes;
      o.filter_page_bytes = cfg.filter_page_bytes;
      o.shard_bytes = cfg.block_bytes;
      o.cache_budget_bytes = cfg.memory_budget_bytes;
      return o;
    }
  };

  // Priority classes for the CLOCK cache.
  static constexpr u8 kNodePriority = 3;
  static constexpr u8 kFilterPriority = 2;
  static constexpr u8 kLeafPriority = 1;

  static StatusOr<std::unique_ptr<PageStore>> open(Env& env, const std::string& dir, const Options& opts,
                                                   StatsCounters* stats);

  // Writes a full page into a free slot of the pool. The page is readable
  // immediately (refcount starts at 1) and durable after sync(pool).
  StatusOr<PageId> write_page(PoolKind pool, std::string_view bytes);

  Status sync(PoolKind pool);
  Status sync_all();

  // Reads an arbitrary byte range of a live page through the shard cache.
  StatusOr<std::string> read_range(PageId id, u64 offset, u64 len, u8 priority);

  // Reads one aligned shard (cached under its ShardKey).
  StatusOr<std::shared_ptr<const std::string>> read_shard(PageId id, u32 shard, u8 priority);

  StatusOr<u32> incref(PageId id);
  StatusOr<u32> decref(PageId id);
  u32 refcount(PageId id) const;

  // Replaces all refcounts (manifest replay at open). Pages not mentioned
  // are free.
  void reset_refcounts(const std::unordered_map<u64, i64>& counts);

  u64 page_bytes(PoolKind pool) const { return pools_[static_cast<u32>(pool)].page_bytes; }
  u64 live_pages(PoolKind pool) const;
  u64 live_disk_bytes() const;

  // Writes the advisory allocation bitmaps + headers back to the pool
  // files (checkpoint commit and clean close).
  Status persist_allocation_metadata();

  PageCache& cache() { return cache_; }
  u64 shard_bytes() const { return shard_bytes_; }

  std::vector<u64> live_page_ids(PoolKind pool) const;

 private:
  struct Pool {
    PoolKind kind{};
    u64 page_bytes = 0;
    std::unique_ptr<File> file;
    std::vector<u32> refcounts;   // by page index
    std::vector<bool> allocated;  // by page index
    u64 first_free_hint = 0;
    u64 high_water = 0;  // one past the highest index ever allocated
    mutable std::mutex mu;
  };

  PageStore(Env& env, std::string dir, const Options& opts, StatsCounters* stats)
      : env_{env},
        dir_{std::move(dir)},
        opts_{opts},
        stats_{stats},
        shard_bytes_{opts.shard_bytes},
        cache_{opts.cache_budget_bytes}
  {
  }

  Status open_pool(Pool& pool, PoolKind kind, u64 page_bytes);
  Pool* pool_of(PageId id);
  const Pool* pool_of(PageId id) const;
  u64 page_file_offset(const Pool& pool, u64 index) const;

  static constexpr u64 kHeaderBytes = 4096;
  static constexpr u64 kBitmapBytes = 128 * 1024;  // supports max_pages_per_pool up to 2^20
  static constexpr u64 kPoolMagic = 0x74646270306f6c31ull;

  Env& env_;
  std::string dir_;
  Options opts_;
  StatsCounters* stats_;
  u64 shard_bytes_;
  PageCache cache_;
  Pool pools_[3];  // node, leaf, filter
};

}  // namespace turtledb
