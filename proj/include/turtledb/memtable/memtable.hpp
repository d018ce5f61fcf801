#pragma once

#include <turtledb/core/batch.hpp>
#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <vector>

namespace turtledb {

// Ordered in-memory index over recent updates: one entry per key, newest
// seq wins. Tombstones are stored as entries (removals merge out at the
// checkpoint tree). Any ordered dictionary satisfies the contract; this
// one is a std::map under a shared_mutex.
class MemTable
{
 public:
  explicit MemTable(u64 id) : id_{id} {}

  u64 id() const { return id_; }

  enum class InsertResult { kOk, kStale, kFinalized };

  InsertResult insert(std::string_view key, const Value& value, u64 seq);

  enum class GetState { kFound, kDeleted, kMiss };

  struct GetResult {
    GetState state = GetState::kMiss;
    std::string value;
    u64 seq = 0;
  };

  GetResult get(std::string_view key) const;

  u64 approx_bytes() const { return bytes_.load(std::memory_order_relaxed); }
  bool finalized() const;
  size_t entry_count() const;

  // Marks the table immutable and emits its contents as a sorted batch.
  // Racing inserts observe kFinalized and retry against the new active
  // table. Empty tables yield an empty batch (forced finalize only).
  Batch finalize();

  // Sorted snapshot of the contents (scan path). Cheap for finalized
  // tables after the first call.
  std::vector<Update> snapshot() const;

 private:
  u64 id_;
  mutable std::shared_mutex mu_;
  std::map<Key, std::pair<Value, u64>, std::less<>> entries_;
  std::atomic<u64> bytes_{0};
  bool finalized_ = false;
  mutable std::vector<Update> snapshot_cache_;
  mutable bool snapshot_valid_ = false;
};

// Finalized MemTables not yet covered by a committed checkpoint, newest
// first. Pruned atomically when a checkpoint commits.
class DeltasStack
{
 public:
  void push_newest(std::shared_ptr<const MemTable> table);

  // Tables with id <= through_id are covered by the new checkpoint.
  void prune_through(u64 through_id);

  std::vector<std::shared_ptr<const MemTable>> snapshot() const;

  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<const MemTable>> tables_;  // newest first
};

}  // namespace turtledb
