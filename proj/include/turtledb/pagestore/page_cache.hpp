#pragma once

#include <turtledb/core/types.hpp>
#include <turtledb/pagestore/page_id.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace turtledb {

// Identifies an aligned slice of a page held in the cache.
struct ShardKey {
  u64 page = 0;
  u32 shard = 0;  // shard index within the page (offset = shard * shard_bytes)

  bool operator==(const ShardKey& o) const { return page == o.page && shard == o.shard; }
};

struct ShardKeyHash {
  size_t operator()(const ShardKey& k) const
  {
    return std::hash<u64>{}(k.page * 0x9e3779b97f4a7c15ull + k.shard);
  }
};

// Priority CLOCK replacement: each entry carries a small priority that the
// advancing hand decrements; an unpinned entry is evicted when its
// priority reaches zero. An access restores the priority to the entry's
// class value, so higher classes (interior nodes, filters) survive more
// hand passes than leaf shards.
class PageCache
{
 public:
  explicit PageCache(u64 budget_bytes) : budget_bytes_{budget_bytes} {}

  std::shared_ptr<const std::string> get(const ShardKey& key);

  // Inserts unless the entry cannot fit within the budget after eviction.
  void insert(const ShardKey& key, std::shared_ptr<const std::string> bytes, u8 priority_class);

  // Advance the clock hand until one unpinned zero-priority entry is
  // evicted. Returns the evicted key, or nullopt if nothing was evictable.
  std::optional<ShardKey> evict_step();

  void erase_page(u64 page);

  bool pin(const ShardKey& key);
  void unpin(const ShardKey& key);

  u64 cached_bytes() const
  {
    std::lock_guard<std::mutex> lock{mu_};
    return total_bytes_;
  }

  void set_budget(u64 budget_bytes)
  {
    std::lock_guard<std::mutex> lock{mu_};
    budget_bytes_ = budget_bytes;
    evict_to_fit_locked(0);
  }

  u64 budget() const { return budget_bytes_; }

  size_t entry_count() const
  {
    std::lock_guard<std::mutex> lock{mu_};
    return index_.size();
  }

 private:
  struct Entry {
    ShardKey key;
    std::shared_ptr<const std::string> bytes;
    u8 priority = 0;
    u8 priority_class = 0;
    u32 pin_count = 0;
    bool occupied = false;
  };

  std::optional<ShardKey> evict_step_locked();
  void evict_to_fit_locked(u64 incoming_bytes);
  void remove_slot_locked(size_t slot);

  mutable std::mutex mu_;
  u64 budget_bytes_;
  u64 total_bytes_ = 0;
  std::vector<Entry> ring_;
  std::vector<size_t> free_slots_;
  size_t hand_ = 0;
  std::unordered_map<ShardKey, size_t, ShardKeyHash> index_;
  std::unordered_map<u64, std::vector<size_t>> page_slots_;
};

}  // namespace turtledb
