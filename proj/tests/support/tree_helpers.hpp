#pragma once

#include <turtledb/core/batch.hpp>
#include <turtledb/tree/tree.hpp>

#include <string>
#include <vector>

namespace turtledb::testing {

// Fixed-width decimal keys ("00", "01", ...) sort lexicographically in
// numeric order, which keeps worked examples readable.
inline Key nkey(int n)
{
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d", n);
  return Key{buf};
}

inline Update upd(int n, u64 seq)
{
  return Update{nkey(n), Value::of("v" + std::to_string(n)), seq};
}

inline Update tomb(int n, u64 seq)
{
  return Update{nkey(n), Value::tombstone(), seq};
}

inline Batch batch_of(const std::vector<int>& keys, u64 seq_base)
{
  std::vector<Update> updates;
  u64 seq = seq_base;
  for (int k : keys) {
    updates.push_back(upd(k, seq++));
  }
  StatusOr<Batch> b = make_batch(std::move(updates));
  if (!b.ok()) {
    std::abort();
  }
  return std::move(b).value();
}

// Small config for worked examples: generous leaf so nothing flushes.
inline Config example_config()
{
  Config cfg;
  cfg.node_page_bytes = 4096;
  cfg.leaf_page_bytes = 4096;
  cfg.filter_page_bytes = 1024;
  cfg.block_bytes = 512;
  cfg.pivot_capacity = 8;
  return cfg;
}

// A height-1 node with `sep` separating two empty leaves, spanning the
// whole key space. Reproduces the worked buffer-insertion scenario.
inline NodePtr make_two_leaf_node(const Config& cfg, const Key& sep)
{
  auto node = std::make_shared<Node>();
  node->height = 1;
  node->upper_inf = true;
  node->levels.resize(cfg.buffer_levels());
  node->pivot_keys = {Key{}, sep, Key{}};
  for (int i = 0; i < 2; ++i) {
    LeafChild leaf;
    leaf.run = EntryRun::make({});
    Child child;
    child.v = std::move(leaf);
    node->children.push_back(std::move(child));
  }
  node->recompute_pending();
  return node;
}

// Keys of every segment at a buffer level, in segment order.
inline std::vector<std::vector<Key>> level_layout(const Tree& tree, const Node& node, u32 level)
{
  std::vector<std::vector<Key>> out;
  for (const Segment& seg : node.levels[level].segments) {
    StatusOr<RunRef> run = tree.segment_run(seg);
    if (!run.ok()) {
      std::abort();
    }
    std::vector<Key> keys;
    for (const Update& u : (*run)->entries) {
      keys.push_back(u.key);
    }
    out.push_back(std::move(keys));
  }
  return out;
}

inline std::vector<Key> keys_of(const std::vector<int>& ns)
{
  std::vector<Key> out;
  for (int n : ns) {
    out.push_back(nkey(n));
  }
  return out;
}

}  // namespace turtledb::testing
