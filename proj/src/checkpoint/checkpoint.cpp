#include <turtledb/checkpoint/checkpoint.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>
#include <turtledb/tree/filter.hpp>
#include <turtledb/tree/node_page.hpp>
#include <turtledb/tree/run_page.hpp>

#include <map>
#include <unordered_map>

namespace turtledb {

Status CheckpointPipeline::load_node(PageId id, NodePtr* out)
{
  const u64 page_bytes = store_.page_bytes(id.pool());
  TDB_TRY_ASSIGN(std::string bytes, store_.read_range(id, 0, page_bytes, PageStore::kNodePriority));
  TDB_TRY_ASSIGN(ParsedNode parsed, parse_node(bytes, cfg_.buffer_levels()));

  auto node = std::make_shared<Node>(std::move(parsed.node));
  node->page = id;
  for (auto& [child_page, filter_page] : parsed.child_refs) {
    Child child;
    if (node->height == 1) {
      LeafChild leaf;
      leaf.page = child_page;
      leaf.filter = filter_page;
      child.v = std::move(leaf);
    } else {
      NodePtr child_node;
      TDB_TRY(load_node(child_page, &child_node));
      child.v = std::move(child_node);
    }
    node->children.push_back(std::move(child));
  }
  node->recompute_pending();
  *out = std::move(node);
  return Status::OK();
}

Status CheckpointPipeline::load_base(const Checkpoint& base)
{
  base_ = base;
  next_generation_ = base.generation + 1;
  pending_seq_ub_ = base.seq_upper_bound;
  batches_applied_ = 0;
  releases_.clear();

  if (!base.root.valid()) {
    root_.root = std::monostate{};
    return Status::OK();
  }

  TDB_TRY_ASSIGN(std::string header, store_.read_range(base.root, 0, 8, PageStore::kNodePriority));
  const u32 magic = get_u32(header.data());
  if (magic == kRunPageMagic) {
    LeafChild leaf;
    leaf.page = base.root;
    root_.root = std::move(leaf);
    return Status::OK();
  }
  if (magic == kNodePageMagic) {
    NodePtr node;
    TDB_TRY(load_node(base.root, &node));
    root_.root = std::move(node);
    return Status::OK();
  }
  return Status::open_failure("checkpoint root page has unknown layout");
}

Status CheckpointPipeline::apply_batch(const Batch& batch)
{
  if (batch.empty()) {
    return Status::OK();
  }
  TDB_TRY(tree_.batch_update(root_, batch));
  batches_applied_ += 1;
  pending_seq_ub_ = std::max(pending_seq_ub_, batch.max_seq());
  return Status::OK();
}

namespace {

struct DirtyRunWalk {
  // Dirty leaves and segments in deterministic traversal order. Segments
  // sharing one run (post-split) are written once.
  std::vector<LeafChild*> leaves;
  std::vector<Segment*> segments;

  void visit(TreeRoot& root)
  {
    if (root.is_leaf()) {
      if (root.leaf().dirty()) {
        leaves.push_back(&root.leaf());
      }
      return;
    }
    if (root.is_node()) {
      visit_node(*root.node());
    }
  }

  void visit_node(Node& node)
  {
    for (BufferLevel& level : node.levels) {
      for (Segment& seg : level.segments) {
        if (seg.dirty()) {
          segments.push_back(&seg);
        }
      }
    }
    for (Child& child : node.children) {
      if (child.is_leaf()) {
        if (child.leaf().dirty()) {
          leaves.push_back(&child.leaf());
        }
      } else {
        visit_node(*child.node());
      }
    }
  }
};

}  // namespace

Status CheckpointPipeline::write_runs(TreeRoot& root, std::vector<PageId>* new_pages,
                                      std::vector<PageId*>* assigned)
{
  DirtyRunWalk walk;
  walk.visit(root);

  const bool is_root_leaf = root.is_leaf();
  for (LeafChild* leaf : walk.leaves) {
    TDB_CHECK(leaf->run != nullptr);
    TDB_TRY_ASSIGN(std::string page, build_run_page(leaf->run->entries, RunKind::kLeaf, cfg_.leaf_page_bytes));
    TDB_TRY_ASSIGN(leaf->page, store_.write_page(PoolKind::kLeaf, page));
    new_pages->push_back(leaf->page);
    assigned->push_back(&leaf->page);

    // Per-leaf filter; the root leaf has no parent slot to reference one.
    if (!(is_root_leaf && leaf == &root.leaf())) {
      std::vector<std::string_view> keys;
      keys.reserve(leaf->run->entries.size());
      for (const Update& u : leaf->run->entries) {
        keys.emplace_back(u.key);
      }
      const std::string filter_page =
          build_filter_page(keys, cfg_.effective_filter_bits_per_key(), cfg_.filter_page_bytes);
      TDB_TRY_ASSIGN(leaf->filter, store_.write_page(PoolKind::kFilter, filter_page));
      new_pages->push_back(leaf->filter);
      assigned->push_back(&leaf->filter);
    }
  }

  std::unordered_map<const EntryRun*, PageId> written;
  for (Segment* seg : walk.segments) {
    TDB_CHECK(seg->run != nullptr);
    auto it = written.find(seg->run.get());
    if (it != written.end()) {
      seg->page = it->second;
      releases_.acquire(it->second);  // second in-tree reference (shared run)
      assigned->push_back(&seg->page);
      continue;
    }
    TDB_TRY_ASSIGN(std::string page, build_run_page(seg->run->entries, RunKind::kSegment, cfg_.leaf_page_bytes));
    TDB_TRY_ASSIGN(seg->page, store_.write_page(PoolKind::kLeaf, page));
    written.emplace(seg->run.get(), seg->page);
    new_pages->push_back(seg->page);
    assigned->push_back(&seg->page);
  }
  return Status::OK();
}

namespace {

Status write_node_recursive(PageStore& store, const Config& cfg, Node& node, std::vector<PageId>* new_pages,
                            std::vector<PageId*>* assigned)
{
  for (Child& child : node.children) {
    if (!child.is_leaf()) {
      TDB_TRY(write_node_recursive(store, cfg, *child.node(), new_pages, assigned));
    }
  }
  if (!node.dirty()) {
    return Status::OK();
  }
  TDB_TRY_ASSIGN(std::string image, serialize_node(node));
  if (image.size() <= cfg.node_page_bytes) {
    image.resize(cfg.node_page_bytes, '\0');
    TDB_TRY_ASSIGN(node.page, store.write_page(PoolKind::kNode, image));
  } else if (image.size() <= cfg.leaf_page_bytes) {
    // Pathological long-key nodes overflow the node pool; store them in
    // the leaf-sized pool (PageId carries the pool).
    image.resize(cfg.leaf_page_bytes, '\0');
    TDB_TRY_ASSIGN(node.page, store.write_page(PoolKind::kLeaf, image));
  } else {
    return Status::out_of_space("node image exceeds largest pool page");
  }
  new_pages->push_back(node.page);
  assigned->push_back(&node.page);
  return Status::OK();
}

void drop_clean_runs(TreeRoot& root)
{
  struct Walk {
    void visit_node(Node& node)
    {
      for (BufferLevel& level : node.levels) {
        for (Segment& seg : level.segments) {
          if (seg.page.valid()) {
            seg.run = nullptr;
          }
        }
      }
      for (Child& child : node.children) {
        if (child.is_leaf()) {
          if (child.leaf().page.valid()) {
            child.leaf().run = nullptr;
          }
        } else {
          visit_node(*child.node());
        }
      }
    }
  } walk;
  if (root.is_leaf()) {
    if (root.leaf().page.valid()) {
      root.leaf().run = nullptr;
    }
  } else if (root.is_node()) {
    walk.visit_node(*root.node());
  }
}

}  // namespace

Status CheckpointPipeline::write_nodes(TreeRoot& root, std::vector<PageId>* new_pages,
                                       std::vector<PageId*>* assigned)
{
  if (root.is_node()) {
    return write_node_recursive(store_, cfg_, *root.node(), new_pages, assigned);
  }
  return Status::OK();
}

StatusOr<Checkpoint> CheckpointPipeline::externalize()
{
  std::vector<PageId> new_pages;
  std::vector<PageId*> assigned;

  const auto undo = [&]() {
    for (PageId* slot : assigned) {
      *slot = PageId{};
    }
    for (PageId page : new_pages) {
      (void)store_.decref(page);
    }
  };

  Status s = write_runs(root_, &new_pages, &assigned);
  if (s.ok()) {
    s = write_nodes(root_, &new_pages, &assigned);
  }
  if (s.ok()) {
    s = store_.sync_all();
  }
  if (!s.ok()) {
    undo();
    return s;
  }

  PageId root_page{};
  if (root_.is_leaf()) {
    root_page = root_.leaf().page;
  } else if (root_.is_node()) {
    root_page = root_.node()->page;
  }

  // Refcount deltas: +1 per new page and per extra acquired reference,
  // -1 per dropped reference.
  std::map<u64, i64> deltas;
  for (PageId p : new_pages) {
    deltas[p.v] += 1;
  }
  for (PageId p : releases_.acquired) {
    deltas[p.v] += 1;
  }
  for (PageId p : releases_.released) {
    deltas[p.v] -= 1;
  }

  Manifest::Prepare prepare;
  prepare.generation = next_generation_;
  prepare.root_page = root_page.v;
  prepare.seq_upper_bound = pending_seq_ub_;
  for (const auto& [page, delta] : deltas) {
    if (delta != 0) {
      prepare.deltas.emplace_back(page, delta);
    }
  }
  s = manifest_.append_prepare(prepare);
  if (s.ok()) {
    s = manifest_.append_commit(prepare.generation);
  }
  if (!s.ok()) {
    undo();
    return s;
  }

  // Committed: apply deltas to the live refcount table. Newly written
  // pages already carry their initial count of one.
  std::unordered_map<u64, bool> is_new;
  for (PageId p : new_pages) {
    is_new[p.v] = true;
  }
  for (const auto& [page, delta] : deltas) {
    i64 net = delta - (is_new.count(page) != 0 ? 1 : 0);
    for (; net > 0; --net) {
      (void)store_.incref(PageId{page});
    }
    for (; net < 0; ++net) {
      StatusOr<u32> rc = store_.decref(PageId{page});
      if (!rc.ok()) {
        return rc.status();
      }
    }
  }
  (void)store_.persist_allocation_metadata();

  drop_clean_runs(root_);
  releases_.clear();
  batches_applied_ = 0;
  base_ = Checkpoint{root_page, pending_seq_ub_, prepare.generation};
  next_generation_ += 1;
  return base_;
}

u64 CheckpointPipeline::dirty_bytes() const
{
  struct Walk {
    u64 bytes = 0;
    void visit_node(const Node& node)
    {
      for (const BufferLevel& level : node.levels) {
        for (const Segment& seg : level.segments) {
          if (seg.run != nullptr) {
            bytes += seg.run->logical_bytes;
          }
        }
      }
      for (const Child& child : node.children) {
        if (child.is_leaf()) {
          if (child.leaf().run != nullptr) {
            bytes += child.leaf().run->logical_bytes;
          }
        } else {
          visit_node(*child.node());
        }
      }
    }
  } walk;
  if (root_.is_leaf() && root_.leaf().run != nullptr) {
    return root_.leaf().run->logical_bytes;
  }
  if (root_.is_node()) {
    walk.visit_node(*root_.node());
  }
  return walk.bytes;
}

}  // namespace turtledb
