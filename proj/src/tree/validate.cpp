#include <turtledb/tree/validate.hpp>

#include <sstream>

namespace turtledb {

namespace {

struct Validator {
  const Tree& tree;
  const Config& cfg;

  Status fail(const std::string& what) const { return Status::contract_violation("validate: " + what); }

  Status check_leaf(const LeafChild& leaf) const
  {
    TDB_TRY_ASSIGN(RunRef run, tree.leaf_run(leaf));
    u64 bytes = 0;
    for (size_t i = 0; i < run->entries.size(); ++i) {
      const Update& u = run->entries[i];
      if (u.value.is_tombstone()) {
        return fail("tombstone in leaf");
      }
      if (i > 0 && !(run->entries[i - 1].key < u.key)) {
        return fail("leaf keys not strictly ascending");
      }
      bytes += encoded_entry_bytes(u);
    }
    if (bytes > cfg.leaf_page_bytes) {
      return fail("leaf exceeds size bound");
    }
    return Status::OK();
  }

  Status check_segment(const Node& node, const Segment& seg) const
  {
    TDB_TRY_ASSIGN(RunRef run, tree.segment_run(seg));
    if (run->entries.empty()) {
      return fail("empty segment run");
    }
    for (size_t i = 1; i < run->entries.size(); ++i) {
      if (!(run->entries[i - 1].key < run->entries[i].key)) {
        return fail("segment keys not strictly ascending");
      }
    }
    if (seg.entry_count != run->entries.size()) {
      return fail("segment entry_count mismatch");
    }
    if (seg.min_key != run->entries.front().key || seg.max_key != run->entries.back().key) {
      return fail("segment min/max mismatch");
    }
    if (seg.active_pivots == 0) {
      return fail("segment with empty active set not removed");
    }
    if ((seg.flushed_pivots & ~seg.active_pivots) != 0) {
      return fail("flushed bit without active bit");
    }
    for (u32 p = 0; p < node.pivot_count(); ++p) {
      auto [a, b] = run_range_for(*run, node.pivot_lower(p), node.pivot_upper(p));
      const u32 start = std::max(a, seg.flushed_upper_for(p));
      u64 visible_bytes = 0;
      for (u32 i = start; i < b; ++i) {
        visible_bytes += encoded_entry_bytes(run->entries[i]);
      }
      const bool has_visible = start < b;
      // A set bit requires at least one non-flushed entry in range. The
      // inverse cannot be audited: a fully flushed pivot clears its bit
      // and resets the bound to zero, discarding the flush position.
      if (seg.pivot_active(p) && !has_visible) {
        return fail("active bit set for pivot with no visible entries");
      }
      if (seg.pivot_active(p) && seg.active_bytes_for(p) != visible_bytes) {
        return fail("active byte count mismatch");
      }
      const u32 bound = seg.flushed_upper_for(p);
      if (bound != 0 && (bound < a || bound > b)) {
        return fail("flushed bound outside pivot range");
      }
    }
    if (seg.active_pivots >> node.pivot_count() != 0) {
      return fail("active bit beyond pivot count");
    }
    return Status::OK();
  }

  Status check_node(const Node& node, std::string_view lower, std::optional<std::string_view> upper, bool is_root,
                    i32 expected_height) const
  {
    if (node.height != expected_height) {
      return fail("uneven leaf depth");
    }
    const u32 c = node.pivot_count();
    if (c == 0) {
      return fail("node with zero pivots");
    }
    if (is_root && c < 2) {
      return fail("interior root with fewer than 2 pivots");
    }
    if (!is_root && (c < (cfg.pivot_capacity + 1) / 2 || c > cfg.pivot_capacity)) {
      return fail("non-root pivot count outside [ceil(rho/2), rho]");
    }
    if (node.pivot_keys.size() != c + 1) {
      return fail("pivot_keys size mismatch");
    }
    if (std::string_view{node.pivot_keys.front()} != lower) {
      return fail("node lower bound mismatch");
    }
    if (upper.has_value() != !node.upper_inf) {
      return fail("node upper-bound kind mismatch");
    }
    if (upper.has_value() && std::string_view{node.pivot_keys.back()} != *upper) {
      return fail("node upper bound mismatch");
    }
    const u32 key_check_count = node.upper_inf ? c : c + 1;
    for (u32 i = 1; i < key_check_count; ++i) {
      if (!(node.pivot_keys[i - 1] < node.pivot_keys[i])) {
        return fail("pivot keys not strictly ascending");
      }
    }

    if (node.levels.size() < cfg.buffer_levels()) {
      return fail("missing buffer levels");
    }
    u32 total_segments = 0;
    for (u32 li = 0; li < node.levels.size(); ++li) {
      const BufferLevel& level = node.levels[li];
      if (level.segments.size() > cfg.level_segment_cap(li)) {
        return fail("level segment count above cap");
      }
      total_segments += static_cast<u32>(level.segments.size());
      for (size_t si = 0; si < level.segments.size(); ++si) {
        if (si > 0 && !(level.segments[si - 1].max_key < level.segments[si].min_key)) {
          return fail("segments within level not disjoint ascending");
        }
        TDB_TRY(check_segment(node, level.segments[si]));
      }
    }
    if (total_segments > cfg.max_buffer_segments()) {
      return fail("total segments above rho - 1");
    }

    {
      Node& mutable_node = const_cast<Node&>(node);
      std::vector<u64> saved = node.pending_bytes;
      mutable_node.recompute_pending();
      const bool match = mutable_node.pending_bytes == saved;
      mutable_node.pending_bytes = std::move(saved);
      if (!match) {
        return fail("pending_bytes out of sync");
      }
    }
    if (node.total_buffered_bytes() > cfg.max_buffered_bytes()) {
      return fail("buffered bytes above L*(rho-1)");
    }

    for (u32 p = 0; p < c; ++p) {
      const Child& child = node.children[p];
      const std::string_view child_lower = node.pivot_lower(p);
      const auto child_upper = node.pivot_upper(p);
      if (child.is_leaf()) {
        if (node.height != 1) {
          return fail("leaf child under node with height != 1");
        }
        TDB_TRY(check_leaf(child.leaf()));
        TDB_TRY_ASSIGN(RunRef run, tree.leaf_run(child.leaf()));
        if (!run->entries.empty()) {
          if (std::string_view{run->entries.front().key} < child_lower) {
            return fail("leaf entry below pivot range");
          }
          if (child_upper.has_value() && !(std::string_view{run->entries.back().key} < *child_upper)) {
            return fail("leaf entry above pivot range");
          }
        }
      } else {
        TDB_TRY(check_node(*child.node(), child_lower, child_upper, /*is_root=*/false, expected_height - 1));
      }
    }
    return Status::OK();
  }
};

}  // namespace

Status validate_tree(const Tree& tree, const TreeRoot& root)
{
  Validator v{tree, tree.config()};
  if (root.empty()) {
    return Status::OK();
  }
  if (root.is_leaf()) {
    return v.check_leaf(root.leaf());
  }
  return v.check_node(*root.node(), std::string_view{}, std::nullopt, /*is_root=*/true, root.node()->height);
}

}  // namespace turtledb
