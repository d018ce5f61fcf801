#pragma once

#include <turtledb/tree/tree.hpp>

#include <optional>
#include <queue>
#include <string>
#include <utility>

namespace turtledb {

// Ordered merge over all live entries of a tree: leaf runs plus every
// visible buffer entry on the relevant root-to-leaf paths. A binary
// min-heap over run cursors drives the merge; newest-wins resolution uses
// (depth, buffer level) recency ranks and tombstones suppress their keys.
//
// The tree must not be mutated while a scanner is live.
class TreeScanner
{
 public:
  TreeScanner(const Tree& tree, const TreeRoot& root) : tree_{&tree}, root_{&root} {}

  Status seek(std::string_view start);

  // Next live (key, value) in ascending order; nullopt at end.
  StatusOr<std::optional<std::pair<std::string, std::string>>> next();

 private:
  struct Source {
    RunRef run;
    u32 pos = 0;
    u32 end = 0;
    u64 rank = 0;
  };

  struct Frame {
    const Node* node = nullptr;
    u32 pivot = 0;
  };

  struct HeapItem {
    std::string_view key;
    u64 rank;
    u32 source;
  };

  struct HeapCmp {
    bool operator()(const HeapItem& a, const HeapItem& b) const
    {
      if (a.key != b.key) {
        return a.key > b.key;
      }
      return a.rank > b.rank;
    }
  };

  static constexpr u64 kLeafRankSlot = 63;

  void push_source(RunRef run, u32 pos, u32 end, u64 rank);
  Status add_pivot_sources(const Node& node, u32 pivot, u32 depth, std::string_view from);
  Status add_leaf_source(const LeafChild& leaf, u32 depth, std::string_view from);
  Status descend(const Node& node, std::string_view from);
  StatusOr<bool> advance_leaf();

  const Tree* tree_;
  const TreeRoot* root_;
  std::vector<Source> sources_;
  std::vector<Frame> frames_;
  std::priority_queue<HeapItem, std::vector<HeapItem>, HeapCmp> heap_;
  std::optional<Key> leaf_upper_;  // nullopt = unbounded
  bool done_ = false;
};

}  // namespace turtledb
