#pragma once

#include <turtledb/core/batch.hpp>
#include <turtledb/core/config.hpp>
#include <turtledb/core/stats.hpp>
#include <turtledb/pagestore/page_store.hpp>
#include <turtledb/tree/node.hpp>

#include <optional>
#include <variant>

namespace turtledb {

// Pages whose tree references changed during the current checkpoint
// window; turned into manifest refcount deltas at externalize.
struct PageReleaseLog {
  std::vector<PageId> released;
  std::vector<PageId> acquired;

  void release(PageId id)
  {
    if (id.valid()) {
      released.push_back(id);
    }
  }

  void acquire(PageId id)
  {
    if (id.valid()) {
      acquired.push_back(id);
    }
  }

  void clear()
  {
    released.clear();
    acquired.clear();
  }
};

struct TreeRoot {
  std::variant<std::monostate, LeafChild, NodePtr> root;

  bool empty() const { return std::holds_alternative<std::monostate>(root); }
  bool is_leaf() const { return std::holds_alternative<LeafChild>(root); }
  bool is_node() const { return std::holds_alternative<NodePtr>(root); }
  LeafChild& leaf() { return std::get<LeafChild>(root); }
  const LeafChild& leaf() const { return std::get<LeafChild>(root); }
  const NodePtr& node() const { return std::get<NodePtr>(root); }
  NodePtr& node() { return std::get<NodePtr>(root); }

  i32 height() const
  {
    if (empty()) {
      return 0;
    }
    if (is_leaf()) {
      return 1;
    }
    return node()->height + 1;
  }
};

enum class PointLookup { kFound, kDeleted, kAbsent };

struct QueryResult {
  PointLookup state = PointLookup::kAbsent;
  std::string value;
};

// Tree algorithms bound to a page store + config. `store` may be null for
// purely in-memory trees (unit tests); `releases` may be null when page
// lifetime bookkeeping is not needed.
class Tree
{
 public:
  Tree(PageStore* store, const Config& cfg, StatsCounters* stats, PageReleaseLog* releases)
      : store_{store}, cfg_{cfg}, stats_{stats}, releases_{releases}
  {
  }

  const Config& config() const { return cfg_; }
  PageStore* store() const { return store_; }
  PageReleaseLog* releases() const { return releases_; }

  // ---- public operations ----

  Status batch_update(TreeRoot& root, const Batch& batch);
  StatusOr<QueryResult> point_query(const TreeRoot& root, std::string_view key) const;

  // ---- building blocks ----

  enum class InsertOutcome { kAbsorbed, kMustFlush };

  // Inserts a (<= L logical bytes) batch into the node buffer, cascading
  // merges down the levels. kMustFlush means no level could absorb the
  // merged run; the node is left unchanged and the caller must flush.
  StatusOr<InsertOutcome> buffer_insert(Node& node, const Batch& batch);

  // Pivot with maximal pending bytes if that maximum >= threshold,
  // ties broken toward the lowest index.
  static std::optional<u32> select_flush_pivot(const Node& node, u64 threshold);

  // Removes up to L logical bytes of updates in the pivot's key range,
  // merged newest-wins across levels. Segment runs are never rewritten;
  // only flushed bounds / active bits change.
  StatusOr<Batch> extract_flush_batch(Node& node, u32 pivot);

  // Newest-wins merge of a batch into a leaf; tombstones annihilate and
  // are dropped. Returns 1..k leaves (a single empty leaf if everything
  // was deleted).
  StatusOr<std::vector<LeafChild>> leaf_merge(const LeafChild& leaf, const Batch& batch);

  // Splits an overfull node as evenly as possible; restorative flushes
  // bring each half back under the dynamic buffered-byte bound.
  StatusOr<std::pair<NodePtr, NodePtr>> split_node(const NodePtr& node);

  // Concatenates two adjacent siblings (combined pivots must fit).
  StatusOr<NodePtr> join_nodes(const NodePtr& left, const NodePtr& right);

  // ---- shared helpers (scan / validate / externalize) ----

  StatusOr<RunRef> segment_run(const Segment& seg) const;
  StatusOr<RunRef> leaf_run(const LeafChild& leaf) const;
  StatusOr<std::vector<Update>> visible_entries(const Node& node, const Segment& seg) const;

  Status node_apply(Node& node, const Batch& batch);
  Status flush_pivot(Node& node, u32 pivot);
  Status flush_until_within(Node& node, u64 byte_bound);

 private:
  void mark_dirty(Node& node);
  void release_leaf(const LeafChild& leaf);
  Status replace_leaf_child(Node& node, u32 pivot, std::vector<LeafChild> new_leaves);
  Status fix_children_overfull(Node& node);
  Status split_pivot_metadata(Node& node, u32 pivot, const std::vector<Key>& seps);
  StatusOr<QueryResult> probe_leaf(const LeafChild& leaf, std::string_view key) const;
  StatusOr<std::vector<std::vector<Update>>> split_leaf_sized(const std::vector<Update>& entries,
                                                              size_t parts_hint) const;
  Status install_leaves(TreeRoot& root, std::vector<LeafChild> leaves);

  PageStore* store_;
  Config cfg_;
  StatsCounters* stats_;
  PageReleaseLog* releases_;
};

}  // namespace turtledb
