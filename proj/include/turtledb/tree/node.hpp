#pragma once

#include <turtledb/core/config.hpp>
#include <turtledb/core/types.hpp>
#include <turtledb/pagestore/page_id.hpp>
#include <turtledb/tree/run.hpp>

#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace turtledb {

// One immutable sorted run referenced from a node buffer, plus the
// per-pivot visibility metadata. The run bytes are never rewritten by a
// flush; only the metadata here changes.
struct Segment {
  PageId page{};  // durable identity; invalid while dirty
  RunRef run;     // entries; always set while dirty, else loaded on demand
  u32 entry_count = 0;
  Key min_key;
  Key max_key;

  u64 active_pivots = 0;   // bit set of pivots with >= 1 visible entry
  u64 flushed_pivots = 0;  // pivots with a partially flushed prefix
  std::vector<u32> flushed_upper;  // sparse, parallel to flushed_pivots bits
  std::vector<u64> active_bytes;   // sparse, parallel to active_pivots bits

  bool dirty() const { return !page.valid(); }

  bool pivot_active(u32 pivot) const { return (active_pivots >> pivot) & 1; }

  // Index of the first non-flushed entry in the pivot's key range; zero
  // when nothing has been flushed for that pivot.
  u32 flushed_upper_for(u32 pivot) const;
  void set_flushed_upper(u32 pivot, u32 bound);
  void clear_flushed(u32 pivot);

  u64 active_bytes_for(u32 pivot) const;
  void set_active_bytes(u32 pivot, u64 bytes);
  void clear_active(u32 pivot);

  // Remaps metadata when pivot p of the owner splits into `fan_out` new
  // pivots. entry_cuts are the absolute entry indexes of the new
  // separators within this segment's run; bytes_per_part are the visible
  // bytes each new pivot inherits (zero = inactive).
  void remap_pivot_split(u32 pivot, u32 fan_out, const std::vector<u32>& entry_cuts,
                         const std::vector<u64>& bytes_per_part);

  // Keeps only pivots [begin, end), shifting them down to start at zero.
  void restrict_pivots(u32 begin, u32 end);

  // Shifts all pivot metadata up by `amount` (join of a left sibling).
  void shift_pivots_up(u32 amount);
};

struct BufferLevel {
  std::vector<Segment> segments;

  bool vacant() const { return segments.empty(); }
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

// A leaf reference held by its parent (or by the tree root). Dirty leaves
// carry their entries; durable leaves are probed through the page cache.
struct LeafChild {
  PageId page{};
  PageId filter{};
  RunRef run;
  u32 entry_count = 0;
  u64 logical_bytes = 0;

  bool dirty() const { return !page.valid(); }
};

struct Child {
  std::variant<NodePtr, LeafChild> v;

  bool is_leaf() const { return std::holds_alternative<LeafChild>(v); }
  LeafChild& leaf() { return std::get<LeafChild>(v); }
  const LeafChild& leaf() const { return std::get<LeafChild>(v); }
  NodePtr& node() { return std::get<NodePtr>(v); }
  const NodePtr& node() const { return std::get<NodePtr>(v); }
};

// Interior node: pivots plus the level-tiered update buffer. height 1
// means the children are leaves. pivot_keys has children.size() + 1
// entries: pivot i covers [pivot_keys[i], pivot_keys[i+1]); the last
// entry is ignored when upper_inf is set. An empty pivot_keys[0] is the
// -infinity bound (valid keys are never empty).
struct Node {
  i32 height = 1;
  PageId page{};
  bool upper_inf = false;
  std::vector<Key> pivot_keys;
  std::vector<Child> children;
  std::vector<BufferLevel> levels;
  std::vector<u64> pending_bytes;

  u32 pivot_count() const { return static_cast<u32>(children.size()); }

  const Key& lower_bound_key() const { return pivot_keys.front(); }

  bool dirty() const { return !page.valid(); }

  // Pivot whose range contains `key`. The key must be within the node's
  // own range.
  u32 pivot_for_key(std::string_view key) const;

  std::string_view pivot_lower(u32 pivot) const { return pivot_keys[pivot]; }

  // nullopt = unbounded above (only for the last pivot of an upper_inf node).
  std::optional<std::string_view> pivot_upper(u32 pivot) const
  {
    if (pivot + 1 == children.size() && upper_inf) {
      return std::nullopt;
    }
    return std::string_view{pivot_keys[pivot + 1]};
  }

  u32 total_segments() const;
  u64 total_buffered_bytes() const;

  void recompute_pending();

  // Drops any segment whose active set became empty, recording released
  // durable pages in `released` (may be null).
  void sweep_inactive_segments(std::vector<PageId>* released);
};

// Entry index range [lo, hi) of `run` covered by key range
// [lower, upper); upper nullopt = unbounded.
std::pair<u32, u32> run_range_for(const EntryRun& run, std::string_view lower,
                                  std::optional<std::string_view> upper);

// Builds a fresh segment over `run` with metadata computed against the
// owner node's pivot boundaries.
Segment make_segment(const Node& owner, RunRef run);

}  // namespace turtledb
