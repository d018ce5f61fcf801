#include <turtledb/tree/scan.hpp>

#include <turtledb/core/check.hpp>

#include <algorithm>

namespace turtledb {

namespace {

u32 lower_bound_index(const EntryRun& run, std::string_view key)
{
  const auto cmp = [](const Update& u, std::string_view k) { return std::string_view{u.key} < k; };
  return static_cast<u32>(std::lower_bound(run.entries.begin(), run.entries.end(), key, cmp) - run.entries.begin());
}

}  // namespace

void TreeScanner::push_source(RunRef run, u32 pos, u32 end, u64 rank)
{
  if (pos >= end) {
    return;
  }
  const u32 idx = static_cast<u32>(sources_.size());
  sources_.push_back(Source{std::move(run), pos, end, rank});
  heap_.push(HeapItem{sources_[idx].run->entries[pos].key, rank, idx});
}

Status TreeScanner::add_pivot_sources(const Node& node, u32 pivot, u32 depth, std::string_view from)
{
  for (u32 li = 0; li < node.levels.size(); ++li) {
    for (const Segment& seg : node.levels[li].segments) {
      if (!seg.pivot_active(pivot)) {
        continue;
      }
      TDB_TRY_ASSIGN(RunRef run, tree_->segment_run(seg));
      auto [a, b] = run_range_for(*run, node.pivot_lower(pivot), node.pivot_upper(pivot));
      a = std::max(a, seg.flushed_upper_for(pivot));
      a = std::max(a, lower_bound_index(*run, from));
      push_source(std::move(run), a, b, static_cast<u64>(depth) * 64 + li);
    }
  }
  return Status::OK();
}

Status TreeScanner::add_leaf_source(const LeafChild& leaf, u32 depth, std::string_view from)
{
  TDB_TRY_ASSIGN(RunRef run, tree_->leaf_run(leaf));
  const u32 a = lower_bound_index(*run, from);
  const u32 b = static_cast<u32>(run->entries.size());
  push_source(std::move(run), a, b, static_cast<u64>(depth) * 64 + kLeafRankSlot);
  return Status::OK();
}

Status TreeScanner::descend(const Node& start_node, std::string_view from)
{
  const Node* node = &start_node;
  while (true) {
    const u32 depth = static_cast<u32>(frames_.size());
    u32 pivot = 0;
    if (!node->pivot_keys.empty() && from > std::string_view{node->pivot_keys.front()}) {
      pivot = node->pivot_for_key(from);
    }
    TDB_TRY(add_pivot_sources(*node, pivot, depth, from));
    frames_.push_back(Frame{node, pivot});

    const Child& child = node->children[pivot];
    if (child.is_leaf()) {
      TDB_TRY(add_leaf_source(child.leaf(), depth + 1, from));
      const auto upper = node->pivot_upper(pivot);
      if (upper.has_value()) {
        leaf_upper_ = Key{*upper};
      } else {
        leaf_upper_.reset();
      }
      return Status::OK();
    }
    node = child.node().get();
  }
}

Status TreeScanner::seek(std::string_view start)
{
  sources_.clear();
  frames_.clear();
  heap_ = {};
  leaf_upper_.reset();
  done_ = false;

  if (root_->empty()) {
    done_ = true;
    return Status::OK();
  }
  if (root_->is_leaf()) {
    TDB_TRY(add_leaf_source(root_->leaf(), 0, start));
    leaf_upper_.reset();
    return Status::OK();
  }
  return descend(*root_->node(), start);
}

StatusOr<bool> TreeScanner::advance_leaf()
{
  // Pop frames whose pivot ranges are exhausted, then step the deepest
  // surviving frame to its next pivot and descend to the leftmost leaf.
  while (!frames_.empty() && frames_.back().pivot + 1 >= frames_.back().node->pivot_count()) {
    frames_.pop_back();
  }
  if (frames_.empty()) {
    return false;
  }
  Frame& frame = frames_.back();
  frame.pivot += 1;
  const Node* node = frame.node;
  const u32 pivot = frame.pivot;
  const u32 depth = static_cast<u32>(frames_.size() - 1);
  const std::string_view from = node->pivot_lower(pivot);
  TDB_TRY(add_pivot_sources(*node, pivot, depth, from));

  const Child& child = node->children[pivot];
  if (child.is_leaf()) {
    TDB_TRY(add_leaf_source(child.leaf(), depth + 1, from));
    const auto upper = node->pivot_upper(pivot);
    if (upper.has_value()) {
      leaf_upper_ = Key{*upper};
    } else {
      leaf_upper_.reset();
    }
    return true;
  }
  TDB_TRY(descend(*child.node(), from));
  return true;
}

StatusOr<std::optional<std::pair<std::string, std::string>>> TreeScanner::next()
{
  using Result = std::optional<std::pair<std::string, std::string>>;
  if (done_) {
    return Result{std::nullopt};
  }
  while (true) {
    const bool need_advance =
        heap_.empty() || (leaf_upper_.has_value() && heap_.top().key >= std::string_view{*leaf_upper_});
    if (need_advance) {
      TDB_TRY_ASSIGN(bool moved, advance_leaf());
      if (!moved) {
        if (heap_.empty()) {
          done_ = true;
          return Result{std::nullopt};
        }
        // No further leaves; drain what remains (top-level upper bound).
        leaf_upper_.reset();
      }
      continue;
    }

    HeapItem top = heap_.top();
    heap_.pop();
    Source& src = sources_[top.source];
    const Update& winner = src.run->entries[src.pos];

    // Consume older duplicates of the same key.
    while (!heap_.empty() && heap_.top().key == top.key) {
      const u32 s = heap_.top().source;
      heap_.pop();
      Source& other = sources_[s];
      if (++other.pos < other.end) {
        heap_.push(HeapItem{other.run->entries[other.pos].key, other.rank, s});
      }
    }
    if (++src.pos < src.end) {
      heap_.push(HeapItem{src.run->entries[src.pos].key, src.rank, top.source});
    }

    if (winner.value.is_tombstone()) {
      continue;
    }
    return Result{std::pair<std::string, std::string>{winner.key, std::string{winner.value.bytes()}}};
  }
}

}  // namespace turtledb
