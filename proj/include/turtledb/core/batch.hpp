#pragma once

#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>

namespace turtledb {

// Sort + de-duplicate an unordered pile of updates into a Batch.
// For duplicate keys only the entry with the highest seq survives;
// tombstones survive de-duplication.
StatusOr<Batch> make_batch(std::vector<Update> updates);

// One key-sorted input run for merge_runs. Lower rank = newer; per key the
// entry from the newest-ranked run wins. Keys must be unique within a run.
struct RankedRun {
  const Update* data = nullptr;
  size_t count = 0;
  u64 rank = 0;

  RankedRun() = default;
  RankedRun(const std::vector<Update>& run, u64 rank_) : data{run.data()}, count{run.size()}, rank{rank_} {}
  RankedRun(const Update* d, size_t n, u64 rank_) : data{d}, count{n}, rank{rank_} {}
};

enum class DropTombstones : bool { kNo = false, kYes = true };

// K-way merge of sorted runs with newest-wins semantics (binary min-heap
// over run cursors). If drop_tombstones, tombstone entries are omitted
// from the output.
StatusOr<std::vector<Update>> merge_runs(const std::vector<RankedRun>& runs, DropTombstones drop);

}  // namespace turtledb
