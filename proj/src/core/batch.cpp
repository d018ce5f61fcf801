#include <turtledb/core/batch.hpp>

#include <algorithm>
#include <queue>

namespace turtledb {

const char* error_code_name(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kOk:
      return "OK";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kInvalidParameter:
      return "InvalidParameter";
    case ErrorCode::kContractViolation:
      return "ContractViolation";
    case ErrorCode::kEmptyBatch:
      return "EmptyBatch";
    case ErrorCode::kIOFailure:
      return "IOFailure";
    case ErrorCode::kOutOfSpace:
      return "OutOfSpace";
    case ErrorCode::kUseAfterFree:
      return "UseAfterFree";
    case ErrorCode::kRecordTooLarge:
      return "RecordTooLarge";
    case ErrorCode::kRecoveryHalt:
      return "RecoveryHalt";
    case ErrorCode::kOpenFailure:
      return "OpenFailure";
    case ErrorCode::kNotFound:
      return "NotFound";
  }
  return "Unknown";
}

StatusOr<Batch> make_batch(std::vector<Update> updates)
{
  if (updates.empty()) {
    return Status::empty_batch("make_batch: no updates");
  }

  std::stable_sort(updates.begin(), updates.end(), [](const Update& a, const Update& b) {
    if (a.key != b.key) {
      return a.key < b.key;
    }
    return a.seq < b.seq;
  });

  // Keep the last (highest-seq) entry of each equal-key group. Tombstones
  // are kept like any other payload.
  Batch out;
  out.entries.reserve(updates.size());
  for (size_t i = 0; i < updates.size(); ++i) {
    if (i + 1 < updates.size() && updates[i + 1].key == updates[i].key) {
      continue;
    }
    out.entries.push_back(std::move(updates[i]));
  }
  return out;
}

namespace {

struct HeapItem {
  std::string_view key;
  u64 rank;
  size_t run_index;
};

struct HeapCmp {
  // Min-heap by key, then by rank (so the newest duplicate pops first).
  bool operator()(const HeapItem& a, const HeapItem& b) const
  {
    if (a.key != b.key) {
      return a.key > b.key;
    }
    return a.rank > b.rank;
  }
};

}  // namespace

StatusOr<std::vector<Update>> merge_runs(const std::vector<RankedRun>& runs, DropTombstones drop)
{
  for (const RankedRun& r : runs) {
    for (size_t i = 1; i < r.count; ++i) {
      if (!(r.data[i - 1].key < r.data[i].key)) {
        return Status::contract_violation("merge_runs: input run not sorted with unique keys");
      }
    }
  }

  std::vector<size_t> cursor(runs.size(), 0);
  std::priority_queue<HeapItem, std::vector<HeapItem>, HeapCmp> heap;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].count > 0) {
      heap.push(HeapItem{runs[i].data[0].key, runs[i].rank, i});
    }
  }

  std::vector<Update> out;
  while (!heap.empty()) {
    HeapItem top = heap.top();
    heap.pop();

    const Update& winner = runs[top.run_index].data[cursor[top.run_index]];

    // Discard older entries for the same key.
    while (!heap.empty() && heap.top().key == top.key) {
      size_t r = heap.top().run_index;
      heap.pop();
      if (++cursor[r] < runs[r].count) {
        heap.push(HeapItem{runs[r].data[cursor[r]].key, runs[r].rank, r});
      }
    }

    if (!(drop == DropTombstones::kYes && winner.value.is_tombstone())) {
      out.push_back(winner);
    }

    size_t r = top.run_index;
    if (++cursor[r] < runs[r].count) {
      heap.push(HeapItem{runs[r].data[cursor[r]].key, runs[r].rank, r});
    }
  }
  return out;
}

}  // namespace turtledb
