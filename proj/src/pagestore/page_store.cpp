#include <turtledb/pagestore/page_store.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>

#include <algorithm>

namespace turtledb {

namespace {

const char* pool_file_name(PoolKind kind)
{
  switch (kind) {
    case PoolKind::kNode:
      return "pool-node.dat";
    case PoolKind::kLeaf:
      return "pool-leaf.dat";
    case PoolKind::kFilter:
      return "pool-filter.dat";
    default:
      return "pool-unknown.dat";
  }
}

}  // namespace

StatusOr<std::unique_ptr<PageStore>> PageStore::open(Env& env, const std::string& dir, const Options& opts,
                                                     StatsCounters* stats)
{
  auto store = std::unique_ptr<PageStore>{new PageStore{env, dir, opts, stats}};
  TDB_TRY(store->open_pool(store->pools_[0], PoolKind::kNode, opts.node_page_bytes));
  TDB_TRY(store->open_pool(store->pools_[1], PoolKind::kLeaf, opts.leaf_page_bytes));
  TDB_TRY(store->open_pool(store->pools_[2], PoolKind::kFilter, opts.filter_page_bytes));
  return store;
}

Status PageStore::open_pool(Pool& pool, PoolKind kind, u64 page_bytes)
{
  pool.kind = kind;
  pool.page_bytes = page_bytes;
  const std::string path = dir_ + "/" + pool_file_name(kind);
  const bool existed = env_.file_exists(path);
  TDB_TRY_ASSIGN(pool.file, env_.open_file(path, /*create=*/true));

  if (existed) {
    TDB_TRY_ASSIGN(u64 size, pool.file->size());
    if (size >= kHeaderBytes) {
      std::string header;
      TDB_TRY(pool.file->pread(0, 64, &header));
      if (get_u64(header.data()) != kPoolMagic) {
        return Status::open_failure(path + ": bad pool magic");
      }
      if (get_u32(header.data() + 8) != 1) {
        return Status::open_failure(path + ": unsupported pool version");
      }
      if (get_u64(header.data() + 12) != page_bytes) {
        return Status::open_failure(path + ": page size mismatch");
      }
      pool.high_water = get_u64(header.data() + 20);
    }
  } else {
    std::string header;
    put_u64(header, kPoolMagic);
    put_u32(header, 1);
    put_u64(header, page_bytes);
    put_u64(header, 0);  // high water
    header.resize(kHeaderBytes, '\0');
    TDB_TRY(pool.file->pwrite(0, header));
    std::string bitmap(kBitmapBytes, '\0');
    TDB_TRY(pool.file->pwrite(kHeaderBytes, bitmap));
    TDB_TRY(pool.file->sync());
  }
  pool.refcounts.assign(pool.high_water, 0);
  pool.allocated.assign(pool.high_water, false);
  return Status::OK();
}

u64 PageStore::page_file_offset(const Pool& pool, u64 index) const
{
  return kHeaderBytes + kBitmapBytes + index * pool.page_bytes;
}

PageStore::Pool* PageStore::pool_of(PageId id)
{
  if (!id.valid()) {
    return nullptr;
  }
  const u32 kind = static_cast<u32>(id.pool());
  if (kind > static_cast<u32>(PoolKind::kFilter)) {
    return nullptr;
  }
  return &pools_[kind];
}

const PageStore::Pool* PageStore::pool_of(PageId id) const
{
  return const_cast<PageStore*>(this)->pool_of(id);
}

StatusOr<PageId> PageStore::write_page(PoolKind kind, std::string_view bytes)
{
  Pool& pool = pools_[static_cast<u32>(kind)];
  TDB_CHECK_EQ(bytes.size(), pool.page_bytes);

  u64 index;
  {
    std::lock_guard<std::mutex> lock{pool.mu};
    index = pool.first_free_hint;
    while (index < pool.allocated.size() && pool.allocated[index]) {
      ++index;
    }
    if (index >= opts_.max_pages_per_pool) {
      return Status::out_of_space(std::string{pool_file_name(kind)} + ": pool full");
    }
    if (index >= pool.allocated.size()) {
      pool.allocated.resize(index + 1, false);
      pool.refcounts.resize(index + 1, 0);
    }
    pool.allocated[index] = true;
    pool.refcounts[index] = 1;
    pool.first_free_hint = index + 1;
    pool.high_water = std::max(pool.high_water, index + 1);
  }

  Status s = pool.file->pwrite(page_file_offset(pool, index), bytes);
  if (!s.ok()) {
    std::lock_guard<std::mutex> lock{pool.mu};
    pool.allocated[index] = false;
    pool.refcounts[index] = 0;
    pool.first_free_hint = std::min(pool.first_free_hint, index);
    return s;
  }
  if (stats_ != nullptr) {
    stats_->add_page_write(kind, pool.page_bytes);
  }
  return PageId::make(kind, index);
}

Status PageStore::sync(PoolKind kind)
{
  return pools_[static_cast<u32>(kind)].file->sync();
}

Status PageStore::sync_all()
{
  for (Pool& pool : pools_) {
    TDB_TRY(pool.file->sync());
  }
  return Status::OK();
}

StatusOr<std::shared_ptr<const std::string>> PageStore::read_shard(PageId id, u32 shard, u8 priority)
{
  Pool* pool = pool_of(id);
  if (pool == nullptr) {
    return Status::invalid_argument("read_shard: invalid page id");
  }
  {
    std::lock_guard<std::mutex> lock{pool->mu};
    const u64 index = id.index();
    if (index >= pool->allocated.size() || !pool->allocated[index] || pool->refcounts[index] == 0) {
      return Status::use_after_free("read_shard: page is not live");
    }
  }
  const u64 shard_off = static_cast<u64>(shard) * shard_bytes_;
  if (shard_off >= pool->page_bytes) {
    return Status::invalid_argument("read_shard: shard out of page bounds");
  }

  ShardKey key{id.v, shard};
  if (auto hit = cache_.get(key)) {
    if (stats_ != nullptr) {
      stats_->cache_hits.fetch_add(1, std::memory_order_relaxed);
      stats_->shard_reads.fetch_add(1, std::memory_order_relaxed);
    }
    return hit;
  }

  const u64 len = std::min<u64>(shard_bytes_, pool->page_bytes - shard_off);
  auto bytes = std::make_shared<std::string>();
  TDB_TRY(pool->file->pread(page_file_offset(*pool, id.index()) + shard_off, len, bytes.get()));
  if (stats_ != nullptr) {
    stats_->cache_misses.fetch_add(1, std::memory_order_relaxed);
    stats_->shard_reads.fetch_add(1, std::memory_order_relaxed);
    stats_->shard_bytes_read[static_cast<u32>(id.pool())].fetch_add(len, std::memory_order_relaxed);
    stats_->pages_read.fetch_add(1, std::memory_order_relaxed);
  }
  std::shared_ptr<const std::string> result = bytes;
  cache_.insert(key, result, priority);
  return result;
}

StatusOr<std::string> PageStore::read_range(PageId id, u64 offset, u64 len, u8 priority)
{
  Pool* pool = pool_of(id);
  if (pool == nullptr) {
    return Status::invalid_argument("read_range: invalid page id");
  }
  if (offset + len > pool->page_bytes) {
    return Status::invalid_argument("read_range: out of page bounds");
  }
  std::string out;
  out.reserve(len);
  u64 pos = offset;
  while (pos < offset + len) {
    const u32 shard = static_cast<u32>(pos / shard_bytes_);
    TDB_TRY_ASSIGN(std::shared_ptr<const std::string> bytes, read_shard(id, shard, priority));
    const u64 shard_start = static_cast<u64>(shard) * shard_bytes_;
    const u64 in_shard = pos - shard_start;
    const u64 take = std::min<u64>(bytes->size() - in_shard, offset + len - pos);
    out.append(*bytes, in_shard, take);
    pos += take;
  }
  return out;
}

StatusOr<u32> PageStore::incref(PageId id)
{
  Pool* pool = pool_of(id);
  if (pool == nullptr) {
    return Status::invalid_argument("incref: invalid page id");
  }
  std::lock_guard<std::mutex> lock{pool->mu};
  const u64 index = id.index();
  if (index >= pool->refcounts.size() || pool->refcounts[index] == 0) {
    return Status::contract_violation("incref: page is not live");
  }
  return ++pool->refcounts[index];
}

StatusOr<u32> PageStore::decref(PageId id)
{
  Pool* pool = pool_of(id);
  if (pool == nullptr) {
    return Status::invalid_argument("decref: invalid page id");
  }
  u32 result;
  bool freed = false;
  {
    std::lock_guard<std::mutex> lock{pool->mu};
    const u64 index = id.index();
    if (index >= pool->refcounts.size() || pool->refcounts[index] == 0) {
      return Status::contract_violation("decref: page is not live");
    }
    result = --pool->refcounts[index];
    if (result == 0) {
      pool->allocated[index] = false;
      pool->first_free_hint = std::min(pool->first_free_hint, index);
      freed = true;
    }
  }
  if (freed) {
    cache_.erase_page(id.v);
  }
  return result;
}

u32 PageStore::refcount(PageId id) const
{
  const Pool* pool = pool_of(id);
  if (pool == nullptr) {
    return 0;
  }
  std::lock_guard<std::mutex> lock{pool->mu};
  const u64 index = id.index();
  if (index >= pool->refcounts.size()) {
    return 0;
  }
  return pool->refcounts[index];
}

void PageStore::reset_refcounts(const std::unordered_map<u64, i64>& counts)
{
  for (Pool& pool : pools_) {
    std::lock_guard<std::mutex> lock{pool.mu};
    std::fill(pool.refcounts.begin(), pool.refcounts.end(), 0);
    std::fill(pool.allocated.begin(), pool.allocated.end(), false);
    pool.first_free_hint = 0;
  }
  for (const auto& [raw, count] : counts) {
    if (count <= 0) {
      continue;
    }
    PageId id{raw};
    Pool* pool = pool_of(id);
    TDB_CHECK(pool != nullptr);
    std::lock_guard<std::mutex> lock{pool->mu};
    const u64 index = id.index();
    if (index >= pool->refcounts.size()) {
      pool->refcounts.resize(index + 1, 0);
      pool->allocated.resize(index + 1, false);
    }
    pool->refcounts[index] = static_cast<u32>(count);
    pool->allocated[index] = true;
    pool->high_water = std::max(pool->high_water, index + 1);
  }
}

u64 PageStore::live_pages(PoolKind kind) const
{
  const Pool& pool = pools_[static_cast<u32>(kind)];
  std::lock_guard<std::mutex> lock{pool.mu};
  u64 n = 0;
  for (bool a : pool.allocated) {
    n += a ? 1 : 0;
  }
  return n;
}

u64 PageStore::live_disk_bytes() const
{
  u64 total = 0;
  for (u32 i = 0; i <= static_cast<u32>(PoolKind::kFilter); ++i) {
    total += live_pages(static_cast<PoolKind>(i)) * pools_[i].page_bytes;
  }
  return total;
}

std::vector<u64> PageStore::live_page_ids(PoolKind kind) const
{
  const Pool& pool = pools_[static_cast<u32>(kind)];
  std::lock_guard<std::mutex> lock{pool.mu};
  std::vector<u64> out;
  for (u64 i = 0; i < pool.allocated.size(); ++i) {
    if (pool.allocated[i]) {
      out.push_back(PageId::make(kind, i).v);
    }
  }
  return out;
}

Status PageStore::persist_allocation_metadata()
{
  for (Pool& pool : pools_) {
    std::string header;
    std::string bitmap(kBitmapBytes, '\0');
    {
      std::lock_guard<std::mutex> lock{pool.mu};
      put_u64(header, kPoolMagic);
      put_u32(header, 1);
      put_u64(header, pool.page_bytes);
      put_u64(header, pool.high_water);
      for (u64 i = 0; i < pool.allocated.size(); ++i) {
        if (pool.allocated[i]) {
          bitmap[i / 8] = static_cast<char>(bitmap[i / 8] | (1 << (i % 8)));
        }
      }
    }
    header.resize(kHeaderBytes, '\0');
    TDB_TRY(pool.file->pwrite(0, header));
    TDB_TRY(pool.file->pwrite(kHeaderBytes, bitmap));
  }
  return Status::OK();
}

}  // namespace turtledb
