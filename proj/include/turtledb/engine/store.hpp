#pragma once

#include <turtledb/checkpoint/checkpoint.hpp>
#include <turtledb/checkpoint/manifest.hpp>
#include <turtledb/core/config.hpp>
#include <turtledb/core/stats.hpp>
#include <turtledb/memtable/memtable.hpp>
#include <turtledb/pagestore/page_store.hpp>
#include <turtledb/tree/scan.hpp>
#include <turtledb/wal/wal.hpp>

#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace turtledb {

// The store facade: WAL + memtables + checkpoint pipeline + tree + page
// store composed behind put/delete/get/scan. Writers append to the WAL
// concurrently; tree mutation is serialized through the pipeline mutex;
// readers run against immutable snapshots plus the pending tree under a
// shared lock.
class Store
{
 public:
  static StatusOr<std::unique_ptr<Store>> open(const std::string& dir, const Config& cfg, Env* env = nullptr);

  ~Store();

  Status put(std::string_view key, std::string_view value);
  Status del(std::string_view key);

  StatusOr<std::optional<std::string>> get(std::string_view key);

  StatusOr<std::vector<std::pair<std::string, std::string>>> scan(std::string_view start, size_t limit);

  // Durability sync of the WAL only (returns highest durable seq).
  StatusOr<u64> sync_wal();

  // Full flush: finalize the active memtable, apply, externalize, trim.
  Status flush();

  StatusOr<u32> set_checkpoint_distance(u32 new_chi);
  u32 checkpoint_distance() const { return chi_.load(std::memory_order_relaxed); }

  StatsSnapshot stats(bool compute_space_amp = false);

  u64 approximate_memory_bytes();

  Status close();

  const Config& config() const { return cfg_; }

  // Introspection hooks used by tests and the bench harness.
  CheckpointPipeline& pipeline() { return *pipeline_; }
  PageStore& pages() { return *pages_; }
  Wal& wal() { return *wal_; }
  StatsCounters& counters() { return stats_; }
  size_t deltas_depth() const { return deltas_.size(); }

 private:
  Store(Env& env, std::string dir, const Config& cfg) : env_{env}, dir_{std::move(dir)}, cfg_{cfg} {}

  Status put_impl(std::string_view key, const Value& value);
  Status maybe_rotate();
  Status rotate_locked(bool forced);       // pipeline_mu_ held
  Status externalize_locked();             // pipeline_mu_ held
  std::shared_ptr<MemTable> active_table();

  Env& env_;
  std::string dir_;
  Config cfg_;
  StatsCounters stats_;

  std::unique_ptr<Manifest> manifest_;
  std::unique_ptr<PageStore> pages_;
  std::unique_ptr<CheckpointPipeline> pipeline_;
  std::unique_ptr<Wal> wal_;

  // Writers hold epoch_mu_ shared across (wal append + memtable insert);
  // rotation takes it exclusively, so a finalized table can never swallow
  // an in-flight update.
  std::shared_mutex epoch_mu_;
  std::shared_mutex active_mu_;
  std::shared_ptr<MemTable> active_;
  DeltasStack deltas_;
  std::atomic<u64> next_table_id_{1};
  u64 last_applied_table_id_ = 0;  // pipeline_mu_ held

  std::shared_mutex tree_mu_;
  std::mutex pipeline_mu_;
  std::atomic<u32> chi_{1};
  bool closed_ = false;
};

}  // namespace turtledb
