#pragma once

#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>
#include <turtledb/pagestore/page_store.hpp>
#include <turtledb/tree/run.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace turtledb {

// On-disk layout for leaf and segment pages. Keys, seqs and values live in
// separate regions so point queries can read only the slices they need:
//
//   [header][sparse index][entry table][key data][seqs][value data]
//
// The sparse index holds every index_step-th key; the entry table holds
// (key offset, value offset) pairs with one sentinel row at the end.
// Values are prefixed with a one-byte op tag (0 = put, 1 = tombstone).

enum class RunKind : u8 { kLeaf = 1, kSegment = 2 };

struct RunPageInfo {
  RunKind kind = RunKind::kLeaf;
  u32 count = 0;
  u32 index_step = 0;  // 0 = no sparse index
  u32 index_off = 0;
  u32 index_count = 0;
  u32 index_size = 0;
  u32 table_off = 0;
  u32 key_data_off = 0;
  u32 key_data_size = 0;
  u32 seq_off = 0;
  u32 value_off = 0;
  u32 value_data_size = 0;
  u32 total_size = 0;
};

inline constexpr u32 kRunPageMagic = 0x52554e31;  // "RUN1"
inline constexpr u32 kRunHeaderBytes = 64;

// Exact serialized size for the given entries and index step.
u64 measure_run_page(const std::vector<Update>& entries, u32 index_step);

// Picks the sparse index step per the reserved-region rule: 16 if the
// index fits in page_bytes/16, else 32, else no index.
u32 choose_index_step(const std::vector<Update>& entries, u64 page_bytes);

StatusOr<std::string> build_run_page(const std::vector<Update>& entries, RunKind kind, u64 page_bytes);

StatusOr<RunPageInfo> parse_run_header(std::string_view header_bytes);

StatusOr<RunRef> decode_run_page(std::string_view page);

// Loads and fully decodes a run page (merge/scan path).
StatusOr<RunRef> load_run(PageStore& store, PageId id, u8 priority);

// Shard-granular access to a run page for point lookups; reads the header,
// the sparse index, and then only the entry-table/key/value slices that the
// binary search touches.
class RunPageView
{
 public:
  static StatusOr<RunPageView> open(PageStore& store, PageId id, u8 priority);

  const RunPageInfo& info() const { return info_; }
  u32 count() const { return info_.count; }

  struct Hit {
    bool tombstone = false;
    std::string value;
    u64 seq = 0;
    u32 index = 0;
  };

  // First position whose key is >= key.
  StatusOr<u32> lower_bound(std::string_view key);

  StatusOr<std::optional<Hit>> find(std::string_view key);

  StatusOr<std::string> key_at(u32 i);

 private:
  RunPageView(PageStore& store, PageId id, u8 priority) : store_{&store}, id_{id}, priority_{priority} {}

  // Returns the index range [lo, hi] to binary search for `key` using the
  // sparse index (hi inclusive as a possible lower_bound result).
  StatusOr<std::pair<u32, u32>> index_range(std::string_view key);

  StatusOr<std::pair<u32, bool>> search(std::string_view key);  // (lower_bound pos, exact match)

  PageStore* store_;
  PageId id_;
  u8 priority_;
  RunPageInfo info_;
};

}  // namespace turtledb
