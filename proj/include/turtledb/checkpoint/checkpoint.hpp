#pragma once

#include <turtledb/checkpoint/manifest.hpp>
#include <turtledb/core/batch.hpp>
#include <turtledb/core/config.hpp>
#include <turtledb/pagestore/page_store.hpp>
#include <turtledb/tree/tree.hpp>

#include <memory>

namespace turtledb {

// A published, durable tree root and the seq range it covers.
struct Checkpoint {
  PageId root{};  // invalid = empty tree
  u64 seq_upper_bound = 0;
  u64 generation = 0;
};

// Owns the in-memory pending tree between externalizations. Batches are
// applied copy-on-write against the durable base; pages are written only
// when the checkpoint-distance window closes, so segments that expire
// within a window never touch storage.
class CheckpointPipeline
{
 public:
  CheckpointPipeline(PageStore& store, Manifest& manifest, const Config& cfg, StatsCounters* stats)
      : store_{store}, manifest_{manifest}, cfg_{cfg}, stats_{stats}, tree_{&store, cfg, stats, &releases_}
  {
  }

  // Materializes the base checkpoint's interior nodes into the pending
  // tree (leaves and segments stay page-backed).
  Status load_base(const Checkpoint& base);

  Status apply_batch(const Batch& batch);

  u32 batches_applied() const { return batches_applied_; }
  u64 pending_seq_upper_bound() const { return pending_seq_ub_; }
  const Checkpoint& base() const { return base_; }

  // Serializes and writes every dirty page, builds leaf indexes and
  // filters, commits refcount deltas + the new root in two phases, and
  // publishes the new checkpoint. A failure leaves the pending state
  // intact and retryable.
  StatusOr<Checkpoint> externalize();

  const TreeRoot& pending_root() const { return root_; }
  TreeRoot& pending_root() { return root_; }
  Tree& tree() { return tree_; }
  const Tree& tree() const { return tree_; }

  // Approximate bytes held by dirty (not yet externalized) runs.
  u64 dirty_bytes() const;

 private:
  Status load_node(PageId id, NodePtr* out);
  Status write_runs(TreeRoot& root, std::vector<PageId>* new_pages, std::vector<PageId*>* assigned);
  Status write_nodes(TreeRoot& root, std::vector<PageId>* new_pages, std::vector<PageId*>* assigned);

  PageStore& store_;
  Manifest& manifest_;
  Config cfg_;
  StatsCounters* stats_;
  PageReleaseLog releases_;
  Tree tree_;
  TreeRoot root_;
  Checkpoint base_;
  u32 batches_applied_ = 0;
  u64 pending_seq_ub_ = 0;
  u64 next_generation_ = 1;
};

}  // namespace turtledb
