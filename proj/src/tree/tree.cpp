#include <turtledb/tree/tree.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/tree/filter.hpp>
#include <turtledb/tree/run_page.hpp>

#include <algorithm>
#include <bit>

namespace turtledb {

namespace {

u64 pivot_mask_range(u32 begin, u32 end)
{
  u64 mask = 0;
  for (u32 p = begin; p < end; ++p) {
    mask |= 1ull << p;
  }
  return mask;
}

}  // namespace

void Tree::mark_dirty(Node& node)
{
  if (node.page.valid()) {
    if (releases_ != nullptr) {
      releases_->release(node.page);
    }
    node.page = PageId{};
  }
}

void Tree::release_leaf(const LeafChild& leaf)
{
  if (releases_ != nullptr) {
    releases_->release(leaf.page);
    releases_->release(leaf.filter);
  }
}

StatusOr<RunRef> Tree::segment_run(const Segment& seg) const
{
  if (seg.run != nullptr) {
    return seg.run;
  }
  TDB_CHECK(store_ != nullptr);
  return load_run(*store_, seg.page, PageStore::kLeafPriority);
}

StatusOr<RunRef> Tree::leaf_run(const LeafChild& leaf) const
{
  if (leaf.run != nullptr) {
    return leaf.run;
  }
  if (!leaf.page.valid()) {
    return EntryRun::make({});
  }
  TDB_CHECK(store_ != nullptr);
  return load_run(*store_, leaf.page, PageStore::kLeafPriority);
}

StatusOr<std::vector<Update>> Tree::visible_entries(const Node& node, const Segment& seg) const
{
  TDB_TRY_ASSIGN(RunRef run, segment_run(seg));
  std::vector<Update> out;
  for (u32 p = 0; p < node.pivot_count(); ++p) {
    if (!seg.pivot_active(p)) {
      continue;
    }
    auto [lo, hi] = run_range_for(*run, node.pivot_lower(p), node.pivot_upper(p));
    lo = std::max(lo, seg.flushed_upper_for(p));
    for (u32 i = lo; i < hi; ++i) {
      out.push_back(run->entries[i]);
    }
  }
  return out;
}

std::optional<u32> Tree::select_flush_pivot(const Node& node, u64 threshold)
{
  std::optional<u32> best;
  u64 best_bytes = 0;
  for (u32 p = 0; p < node.pending_bytes.size(); ++p) {
    if (node.pending_bytes[p] > best_bytes) {
      best_bytes = node.pending_bytes[p];
      best = p;
    }
  }
  if (best_bytes < threshold) {
    return std::nullopt;
  }
  return best;
}

StatusOr<std::vector<std::vector<Update>>> Tree::split_leaf_sized(const std::vector<Update>& entries,
                                                                  size_t parts_hint) const
{
  // The logical byte cap tracks the physical page layout closely, but long
  // keys can push the sparse index past the accounting margin; re-split
  // any part that would not physically fit.
  std::vector<std::vector<Update>> out;
  std::vector<std::vector<Update>> work = split_run_balanced(entries, parts_hint, cfg_.leaf_page_bytes);
  std::reverse(work.begin(), work.end());
  while (!work.empty()) {
    std::vector<Update> part = std::move(work.back());
    work.pop_back();
    const u32 step = choose_index_step(part, cfg_.leaf_page_bytes);
    if (measure_run_page(part, step) <= cfg_.leaf_page_bytes || part.size() == 1) {
      out.push_back(std::move(part));
      continue;
    }
    auto halves = split_run_balanced(part, 2, cfg_.leaf_page_bytes);
    for (auto it = halves.rbegin(); it != halves.rend(); ++it) {
      work.push_back(std::move(*it));
    }
  }
  return out;
}

StatusOr<Tree::InsertOutcome> Tree::buffer_insert(Node& node, const Batch& batch)
{
  TDB_CHECK(!batch.empty());
  if (batch.logical_bytes() > cfg_.leaf_page_bytes) {
    return Status::contract_violation("buffer_insert: batch exceeds leaf size");
  }

  // Phase 1: plan the cascade without mutating the node. Merge the batch
  // with each occupied level until some vacant level can absorb the run.
  std::vector<Update> merged = batch.entries;
  size_t input_runs = 1;
  u32 consumed_through = 0;
  std::optional<u32> target;
  std::vector<std::vector<Update>> parts;

  for (u32 li = 0; li < node.levels.size(); ++li) {
    BufferLevel& level = node.levels[li];
    if (!level.vacant()) {
      std::vector<std::vector<Update>> holders;
      std::vector<RankedRun> runs;
      runs.emplace_back(merged, /*rank=*/0);
      for (const Segment& seg : level.segments) {
        TDB_TRY_ASSIGN(std::vector<Update> vis, visible_entries(node, seg));
        holders.push_back(std::move(vis));
      }
      for (const auto& h : holders) {
        runs.emplace_back(h, /*rank=*/1);
      }
      TDB_TRY_ASSIGN(merged, merge_runs(runs, DropTombstones::kNo));
      input_runs += level.segments.size();
      consumed_through = li + 1;
      continue;
    }

    const u64 total = encoded_run_bytes(merged);
    const u32 cap = cfg_.level_segment_cap(li);
    const size_t min_parts = (total + cfg_.leaf_page_bytes - 1) / cfg_.leaf_page_bytes;
    const size_t parts_hint = std::max(input_runs, min_parts);
    if (parts_hint > cap) {
      continue;  // vacant level too small for this run; keep cascading
    }
    TDB_TRY_ASSIGN(parts, split_leaf_sized(merged, parts_hint));
    if (parts.size() > cap) {
      parts.clear();
      continue;
    }
    target = li;
    break;
  }

  if (!target.has_value()) {
    return InsertOutcome::kMustFlush;
  }

  // Phase 2: commit the cascade.
  mark_dirty(node);
  for (u32 li = 0; li < consumed_through; ++li) {
    for (Segment& seg : node.levels[li].segments) {
      if (releases_ != nullptr) {
        releases_->release(seg.page);
      }
    }
    node.levels[li].segments.clear();
  }
  BufferLevel& dst = node.levels[*target];
  TDB_CHECK(dst.vacant());
  for (auto& part : parts) {
    dst.segments.push_back(make_segment(node, EntryRun::make(std::move(part))));
  }
  node.recompute_pending();
  return InsertOutcome::kAbsorbed;
}

StatusOr<Batch> Tree::extract_flush_batch(Node& node, u32 pivot)
{
  if (pivot >= node.pivot_count()) {
    return Status::contract_violation("extract_flush_batch: pivot out of range");
  }
  const std::string_view lower = node.pivot_lower(pivot);
  const auto upper = node.pivot_upper(pivot);

  struct Source {
    Segment* seg;
    RunRef run;
    u32 start;
    u32 end;
  };
  std::vector<Source> sources;
  std::vector<RankedRun> runs;
  for (u32 li = 0; li < node.levels.size(); ++li) {
    for (Segment& seg : node.levels[li].segments) {
      if (!seg.pivot_active(pivot)) {
        continue;
      }
      TDB_TRY_ASSIGN(RunRef run, segment_run(seg));
      auto [a, b] = run_range_for(*run, lower, upper);
      a = std::max(a, seg.flushed_upper_for(pivot));
      if (a >= b) {
        continue;
      }
      runs.emplace_back(run->entries.data() + a, b - a, /*rank=*/li);
      sources.push_back(Source{&seg, run, a, b});
    }
  }

  TDB_TRY_ASSIGN(std::vector<Update> merged, merge_runs(runs, DropTombstones::kNo));
  if (merged.empty()) {
    return Batch{};
  }

  // Cap the extracted batch at one leaf page of logical bytes.
  size_t cut = 0;
  u64 bytes = 0;
  while (cut < merged.size()) {
    const u64 sz = encoded_entry_bytes(merged[cut]);
    if (cut > 0 && bytes + sz > cfg_.leaf_page_bytes) {
      break;
    }
    bytes += sz;
    ++cut;
  }
  const bool full_range = cut == merged.size();
  const Key& cut_key = merged[cut - 1].key;

  for (Source& src : sources) {
    u32 new_bound;
    if (full_range) {
      new_bound = src.end;
    } else {
      const auto cmp = [](std::string_view k, const Update& u) { return k < std::string_view{u.key}; };
      new_bound = static_cast<u32>(std::upper_bound(src.run->entries.begin() + src.start,
                                                    src.run->entries.begin() + src.end, std::string_view{cut_key},
                                                    cmp) -
                                   src.run->entries.begin());
    }
    if (new_bound <= src.start) {
      continue;
    }
    u64 consumed = 0;
    for (u32 i = src.start; i < new_bound; ++i) {
      consumed += encoded_entry_bytes(src.run->entries[i]);
    }
    if (new_bound >= src.end) {
      src.seg->clear_active(pivot);
      src.seg->clear_flushed(pivot);
    } else {
      src.seg->set_flushed_upper(pivot, new_bound);
      src.seg->set_active_bytes(pivot, src.seg->active_bytes_for(pivot) - consumed);
    }
  }

  mark_dirty(node);
  node.sweep_inactive_segments(releases_ != nullptr ? &releases_->released : nullptr);
  node.recompute_pending();

  merged.resize(cut);
  Batch out;
  out.entries = std::move(merged);
  return out;
}

StatusOr<std::vector<LeafChild>> Tree::leaf_merge(const LeafChild& leaf, const Batch& batch)
{
  TDB_TRY_ASSIGN(RunRef old_run, leaf_run(leaf));
  std::vector<RankedRun> runs;
  runs.emplace_back(batch.entries, /*rank=*/0);
  runs.emplace_back(old_run->entries, /*rank=*/1);
  TDB_TRY_ASSIGN(std::vector<Update> merged, merge_runs(runs, DropTombstones::kYes));

  release_leaf(leaf);

  std::vector<LeafChild> out;
  if (merged.empty()) {
    LeafChild empty;
    empty.run = EntryRun::make({});
    out.push_back(std::move(empty));
    return out;
  }

  const u64 total = encoded_run_bytes(merged);
  const size_t parts_hint = (total + cfg_.leaf_page_bytes - 1) / cfg_.leaf_page_bytes;
  TDB_TRY_ASSIGN(auto parts, split_leaf_sized(merged, parts_hint));
  for (auto& part : parts) {
    LeafChild lc;
    lc.run = EntryRun::make(std::move(part));
    lc.entry_count = static_cast<u32>(lc.run->entries.size());
    lc.logical_bytes = lc.run->logical_bytes;
    out.push_back(std::move(lc));
  }
  return out;
}

Status Tree::split_pivot_metadata(Node& node, u32 pivot, const std::vector<Key>& seps)
{
  const u32 fan_out = static_cast<u32>(seps.size()) + 1;
  const std::string_view lower = node.pivot_lower(pivot);
  const auto upper = node.pivot_upper(pivot);

  for (BufferLevel& level : node.levels) {
    for (Segment& seg : level.segments) {
      std::vector<u32> cuts(seps.size(), 0);
      std::vector<u64> bytes(fan_out, 0);
      if (seg.pivot_active(pivot)) {
        TDB_TRY_ASSIGN(RunRef run, segment_run(seg));
        auto [a, b] = run_range_for(*run, lower, upper);
        const u32 start = std::max(a, seg.flushed_upper_for(pivot));
        const auto cmp = [](const Update& u, std::string_view k) { return std::string_view{u.key} < k; };
        for (size_t j = 0; j < seps.size(); ++j) {
          cuts[j] = static_cast<u32>(
              std::lower_bound(run->entries.begin() + a, run->entries.begin() + b, std::string_view{seps[j]}, cmp) -
              run->entries.begin());
        }
        for (u32 j = 0; j < fan_out; ++j) {
          const u32 part_begin = j == 0 ? a : cuts[j - 1];
          const u32 part_end = j + 1 < fan_out ? cuts[j] : b;
          for (u32 i = std::max(part_begin, start); i < part_end; ++i) {
            bytes[j] += encoded_entry_bytes(run->entries[i]);
          }
        }
      }
      seg.remap_pivot_split(pivot, fan_out, cuts, bytes);
    }
  }
  return Status::OK();
}

Status Tree::replace_leaf_child(Node& node, u32 pivot, std::vector<LeafChild> new_leaves)
{
  TDB_CHECK(!new_leaves.empty());
  mark_dirty(node);
  if (new_leaves.size() == 1) {
    node.children[pivot].v = std::move(new_leaves[0]);
    return Status::OK();
  }

  std::vector<Key> seps;
  for (size_t j = 1; j < new_leaves.size(); ++j) {
    TDB_CHECK(new_leaves[j].run != nullptr);
    TDB_CHECK(!new_leaves[j].run->entries.empty());
    seps.push_back(new_leaves[j].run->entries.front().key);
  }
  TDB_TRY(split_pivot_metadata(node, pivot, seps));

  node.pivot_keys.insert(node.pivot_keys.begin() + pivot + 1, seps.begin(), seps.end());
  node.children.erase(node.children.begin() + pivot);
  for (size_t j = 0; j < new_leaves.size(); ++j) {
    Child c;
    c.v = std::move(new_leaves[j]);
    node.children.insert(node.children.begin() + pivot + j, std::move(c));
  }
  node.recompute_pending();
  return Status::OK();
}

Status Tree::flush_pivot(Node& node, u32 pivot)
{
  TDB_TRY_ASSIGN(Batch fb, extract_flush_batch(node, pivot));
  if (fb.empty()) {
    return Status::OK();
  }
  Child& child = node.children[pivot];
  if (child.is_leaf()) {
    TDB_TRY_ASSIGN(std::vector<LeafChild> leaves, leaf_merge(child.leaf(), fb));
    TDB_TRY(replace_leaf_child(node, pivot, std::move(leaves)));
    return Status::OK();
  }
  TDB_TRY(node_apply(*child.node(), fb));
  TDB_TRY(fix_children_overfull(node));
  return Status::OK();
}

Status Tree::fix_children_overfull(Node& node)
{
  u32 p = 0;
  while (p < node.pivot_count()) {
    Child& child = node.children[p];
    if (child.is_leaf() || child.node()->pivot_count() <= cfg_.pivot_capacity) {
      ++p;
      continue;
    }
    TDB_TRY_ASSIGN(auto halves, split_node(child.node()));
    const Key sep = halves.second->pivot_keys.front();
    TDB_TRY(split_pivot_metadata(node, p, {sep}));
    mark_dirty(node);
    node.pivot_keys.insert(node.pivot_keys.begin() + p + 1, sep);
    node.children[p].v = std::move(halves.first);
    Child right;
    right.v = std::move(halves.second);
    node.children.insert(node.children.begin() + p + 1, std::move(right));
    node.recompute_pending();
    // re-check the same index; the left half may still be overfull
  }
  return Status::OK();
}

Status Tree::node_apply(Node& node, const Batch& batch)
{
  TDB_TRY_ASSIGN(InsertOutcome outcome, buffer_insert(node, batch));
  u32 guard = 0;
  while (outcome == InsertOutcome::kMustFlush) {
    TDB_CHECK_LT(++guard, 4096u);
    std::optional<u32> pivot = select_flush_pivot(node, /*threshold=*/1);
    TDB_CHECK(pivot.has_value());
    TDB_TRY(flush_pivot(node, *pivot));
    TDB_TRY_ASSIGN(outcome, buffer_insert(node, batch));
  }
  while (true) {
    if (node.pivot_count() > cfg_.pivot_capacity) {
      break;  // parent split restores the buffered-byte bound
    }
    std::optional<u32> pivot = select_flush_pivot(node, cfg_.leaf_page_bytes);
    if (!pivot.has_value()) {
      break;
    }
    TDB_TRY(flush_pivot(node, *pivot));
  }
  return Status::OK();
}

Status Tree::flush_until_within(Node& node, u64 byte_bound)
{
  u32 guard = 0;
  while (node.total_buffered_bytes() > byte_bound) {
    TDB_CHECK_LT(++guard, 4096u);
    if (node.pivot_count() > cfg_.pivot_capacity) {
      break;
    }
    std::optional<u32> pivot = select_flush_pivot(node, /*threshold=*/1);
    if (!pivot.has_value()) {
      break;
    }
    TDB_TRY(flush_pivot(node, *pivot));
  }
  return Status::OK();
}

StatusOr<std::pair<NodePtr, NodePtr>> Tree::split_node(const NodePtr& node)
{
  const u32 c = node->pivot_count();
  TDB_CHECK_GE(c, 2u);
  const u32 m = (c + 1) / 2;

  auto left = std::make_shared<Node>();
  auto right = std::make_shared<Node>();
  for (Node* half : {left.get(), right.get()}) {
    half->height = node->height;
    half->levels.resize(node->levels.size());
  }

  left->upper_inf = false;
  left->pivot_keys.assign(node->pivot_keys.begin(), node->pivot_keys.begin() + m + 1);
  left->children.assign(node->children.begin(), node->children.begin() + m);

  right->upper_inf = node->upper_inf;
  right->pivot_keys.assign(node->pivot_keys.begin() + m, node->pivot_keys.end());
  right->children.assign(node->children.begin() + m, node->children.end());

  for (u32 li = 0; li < node->levels.size(); ++li) {
    for (const Segment& seg : node->levels[li].segments) {
      const u64 left_mask = seg.active_pivots & pivot_mask_range(0, m);
      const u64 right_mask = seg.active_pivots & pivot_mask_range(m, c);
      if (left_mask != 0) {
        Segment sl = seg;
        sl.restrict_pivots(0, m);
        left->levels[li].segments.push_back(std::move(sl));
      }
      if (right_mask != 0) {
        Segment sr = seg;
        sr.restrict_pivots(m, c);
        right->levels[li].segments.push_back(std::move(sr));
      }
      if (left_mask != 0 && right_mask != 0 && seg.page.valid() && releases_ != nullptr) {
        releases_->acquire(seg.page);  // now referenced from both halves
      }
      if (left_mask == 0 && right_mask == 0 && seg.page.valid() && releases_ != nullptr) {
        releases_->release(seg.page);
      }
    }
  }
  left->recompute_pending();
  right->recompute_pending();

  if (node->page.valid() && releases_ != nullptr) {
    releases_->release(node->page);
  }

  // Restore the per-half buffered-byte bound; at most one half should
  // need it when the split precondition held.
  for (const NodePtr& half : {left, right}) {
    const u64 bound = cfg_.leaf_page_bytes * (std::max<u64>(half->pivot_count(), 2) - 1);
    if (half->total_buffered_bytes() > bound) {
      TDB_TRY(flush_until_within(*half, bound));
    }
  }
  return std::pair<NodePtr, NodePtr>{left, right};
}

StatusOr<NodePtr> Tree::join_nodes(const NodePtr& left, const NodePtr& right)
{
  if (left->height != right->height) {
    return Status::contract_violation("join_nodes: height mismatch");
  }
  if (left->upper_inf || left->pivot_keys.back() != right->pivot_keys.front()) {
    return Status::contract_violation("join_nodes: non-adjacent key ranges");
  }
  if (left->pivot_count() + right->pivot_count() > cfg_.pivot_capacity) {
    return Status::contract_violation("join_nodes: combined pivot count exceeds capacity");
  }

  auto joined = std::make_shared<Node>();
  joined->height = left->height;
  joined->upper_inf = right->upper_inf;
  joined->levels.resize(std::max(left->levels.size(), right->levels.size()));

  joined->pivot_keys = left->pivot_keys;
  joined->pivot_keys.insert(joined->pivot_keys.end(), right->pivot_keys.begin() + 1, right->pivot_keys.end());
  joined->children = left->children;
  joined->children.insert(joined->children.end(), right->children.begin(), right->children.end());

  const u32 shift = left->pivot_count();
  for (u32 li = 0; li < joined->levels.size(); ++li) {
    if (li < left->levels.size()) {
      for (const Segment& seg : left->levels[li].segments) {
        joined->levels[li].segments.push_back(seg);
      }
    }
    if (li < right->levels.size()) {
      for (const Segment& seg : right->levels[li].segments) {
        Segment moved = seg;
        moved.shift_pivots_up(shift);
        joined->levels[li].segments.push_back(std::move(moved));
      }
    }
    // Concatenation can exceed the level's segment cap when both sides
    // arrive with populated levels. The ranges are disjoint, so the
    // level's visible entries re-split into fewer segments losslessly.
    const u32 cap = cfg_.level_segment_cap(li);
    if (joined->levels[li].segments.size() > cap) {
      std::vector<Update> entries;
      for (const Segment& seg : joined->levels[li].segments) {
        TDB_TRY_ASSIGN(std::vector<Update> vis, visible_entries(*joined, seg));
        entries.insert(entries.end(), vis.begin(), vis.end());
        if (seg.page.valid() && releases_ != nullptr) {
          releases_->release(seg.page);
        }
      }
      TDB_TRY_ASSIGN(auto parts, split_leaf_sized(entries, cap));
      if (parts.size() > cap) {
        return Status::contract_violation("join_nodes: level overflows its segment cap");
      }
      joined->levels[li].segments.clear();
      for (auto& part : parts) {
        joined->levels[li].segments.push_back(make_segment(*joined, EntryRun::make(std::move(part))));
      }
    }
  }
  joined->recompute_pending();

  if (releases_ != nullptr) {
    releases_->release(left->page);
    releases_->release(right->page);
  }
  return joined;
}

Status Tree::install_leaves(TreeRoot& root, std::vector<LeafChild> leaves)
{
  if (leaves.size() == 1) {
    if (leaves[0].run != nullptr && leaves[0].run->entries.empty() && !leaves[0].page.valid()) {
      root.root = std::monostate{};
    } else {
      root.root = std::move(leaves[0]);
    }
    return Status::OK();
  }

  auto node = std::make_shared<Node>();
  node->height = 1;
  node->upper_inf = true;
  node->levels.resize(cfg_.buffer_levels());
  node->pivot_keys.push_back(Key{});  // -inf
  for (size_t j = 1; j < leaves.size(); ++j) {
    node->pivot_keys.push_back(leaves[j].run->entries.front().key);
  }
  node->pivot_keys.push_back(Key{});  // ignored (upper_inf)
  for (auto& leaf : leaves) {
    Child c;
    c.v = std::move(leaf);
    node->children.push_back(std::move(c));
  }
  node->recompute_pending();
  root.root = std::move(node);
  return Status::OK();
}

Status Tree::batch_update(TreeRoot& root, const Batch& batch)
{
  if (batch.empty()) {
    return Status::OK();
  }

  std::vector<std::vector<Update>> chunks;
  if (batch.logical_bytes() <= cfg_.leaf_page_bytes) {
    chunks.push_back(batch.entries);
  } else {
    const size_t n = (batch.logical_bytes() + cfg_.leaf_page_bytes - 1) / cfg_.leaf_page_bytes;
    chunks = split_run_balanced(batch.entries, n, cfg_.leaf_page_bytes);
  }

  for (auto& chunk : chunks) {
    Batch piece;
    piece.entries = std::move(chunk);

    if (root.empty()) {
      LeafChild empty;
      empty.run = EntryRun::make({});
      TDB_TRY_ASSIGN(std::vector<LeafChild> leaves, leaf_merge(empty, piece));
      TDB_TRY(install_leaves(root, std::move(leaves)));
      continue;
    }
    if (root.is_leaf()) {
      TDB_TRY_ASSIGN(std::vector<LeafChild> leaves, leaf_merge(root.leaf(), piece));
      TDB_TRY(install_leaves(root, std::move(leaves)));
      continue;
    }

    TDB_TRY(node_apply(*root.node(), piece));

    while (root.node()->pivot_count() > cfg_.pivot_capacity) {
      NodePtr old_root = root.node();
      TDB_TRY_ASSIGN(auto halves, split_node(old_root));
      auto new_root = std::make_shared<Node>();
      new_root->height = old_root->height + 1;
      new_root->upper_inf = true;
      new_root->levels.resize(cfg_.buffer_levels());
      new_root->pivot_keys.push_back(halves.first->pivot_keys.front());
      new_root->pivot_keys.push_back(halves.second->pivot_keys.front());
      new_root->pivot_keys.push_back(Key{});  // ignored (upper_inf)
      Child cl;
      cl.v = halves.first;
      Child cr;
      cr.v = halves.second;
      new_root->children.push_back(std::move(cl));
      new_root->children.push_back(std::move(cr));
      new_root->recompute_pending();
      TDB_TRY(fix_children_overfull(*new_root));
      root.root = new_root;
    }

    // Root shrink: a 1-pivot interior root hands its child up.
    while (root.is_node() && root.node()->pivot_count() == 1 && root.node()->total_segments() == 0) {
      NodePtr old_root = root.node();
      if (releases_ != nullptr) {
        releases_->release(old_root->page);
      }
      Child& only = old_root->children[0];
      if (only.is_leaf()) {
        root.root = std::move(only.leaf());
      } else {
        root.root = std::move(only.node());
      }
    }
  }
  return Status::OK();
}

StatusOr<QueryResult> Tree::probe_leaf(const LeafChild& leaf, std::string_view key) const
{
  if (leaf.dirty() || store_ == nullptr) {
    TDB_TRY_ASSIGN(RunRef run, leaf_run(leaf));
    const auto cmp = [](const Update& u, std::string_view k) { return std::string_view{u.key} < k; };
    auto it = std::lower_bound(run->entries.begin(), run->entries.end(), key, cmp);
    if (it == run->entries.end() || std::string_view{it->key} != key) {
      return QueryResult{PointLookup::kAbsent, {}};
    }
    if (it->value.is_tombstone()) {
      return QueryResult{PointLookup::kDeleted, {}};
    }
    return QueryResult{PointLookup::kFound, std::string{it->value.bytes()}};
  }

  TDB_TRY_ASSIGN(RunPageView view, RunPageView::open(*store_, leaf.page, PageStore::kLeafPriority));
  TDB_TRY_ASSIGN(auto hit, view.find(key));
  if (!hit.has_value()) {
    return QueryResult{PointLookup::kAbsent, {}};
  }
  if (hit->tombstone) {
    return QueryResult{PointLookup::kDeleted, {}};
  }
  return QueryResult{PointLookup::kFound, std::move(hit->value)};
}

StatusOr<QueryResult> Tree::point_query(const TreeRoot& root, std::string_view key) const
{
  if (root.empty()) {
    return QueryResult{PointLookup::kAbsent, {}};
  }
  if (root.is_leaf()) {
    return probe_leaf(root.leaf(), key);
  }

  const Node* node = root.node().get();
  while (true) {
    const u32 p = node->pivot_for_key(key);

    // Buffer levels newest-first; the first visible hit decides.
    for (const BufferLevel& level : node->levels) {
      const Segment* found = nullptr;
      for (const Segment& seg : level.segments) {
        if (std::string_view{seg.min_key} <= key && key <= std::string_view{seg.max_key}) {
          found = &seg;
          break;
        }
      }
      if (found == nullptr || !found->pivot_active(p)) {
        continue;
      }
      const u32 bound = found->flushed_upper_for(p);
      if (found->run != nullptr || store_ == nullptr) {
        TDB_TRY_ASSIGN(RunRef run, segment_run(*found));
        const auto cmp = [](const Update& u, std::string_view k) { return std::string_view{u.key} < k; };
        auto it = std::lower_bound(run->entries.begin(), run->entries.end(), key, cmp);
        if (it == run->entries.end() || std::string_view{it->key} != key) {
          continue;
        }
        const u32 idx = static_cast<u32>(it - run->entries.begin());
        if (idx < bound) {
          continue;  // flushed, invisible
        }
        if (it->value.is_tombstone()) {
          return QueryResult{PointLookup::kDeleted, {}};
        }
        return QueryResult{PointLookup::kFound, std::string{it->value.bytes()}};
      }
      TDB_TRY_ASSIGN(RunPageView view, RunPageView::open(*store_, found->page, PageStore::kLeafPriority));
      TDB_TRY_ASSIGN(auto hit, view.find(key));
      if (!hit.has_value() || hit->index < bound) {
        continue;
      }
      if (hit->tombstone) {
        return QueryResult{PointLookup::kDeleted, {}};
      }
      return QueryResult{PointLookup::kFound, std::move(hit->value)};
    }

    const Child& child = node->children[p];
    if (!child.is_leaf()) {
      node = child.node().get();
      continue;
    }

    const LeafChild& leaf = child.leaf();
    if (leaf.filter.valid() && !leaf.dirty() && store_ != nullptr) {
      TDB_TRY_ASSIGN(std::string filter_bytes,
                     store_->read_range(leaf.filter, 0, store_->page_bytes(PoolKind::kFilter),
                                        PageStore::kFilterPriority));
      TDB_TRY_ASSIGN(FilterView filter, FilterView::parse(filter_bytes));
      if (!filter.may_contain(key)) {
        if (stats_ != nullptr) {
          stats_->filter_negative_hits.fetch_add(1, std::memory_order_relaxed);
        }
        return QueryResult{PointLookup::kAbsent, {}};
      }
    }
    return probe_leaf(leaf, key);
  }
}

}  // namespace turtledb
