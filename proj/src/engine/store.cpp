#include <turtledb/engine/store.hpp>

#include <turtledb/core/check.hpp>

#include <algorithm>
#include <queue>
#include <thread>

namespace turtledb {

namespace {

StatusOr<std::string> read_whole_file(Env& env, const std::string& path)
{
  TDB_TRY_ASSIGN(std::unique_ptr<File> file, env.open_file(path, /*create=*/false));
  TDB_TRY_ASSIGN(u64 size, file->size());
  std::string out;
  if (size > 0) {
    TDB_TRY(file->pread(0, size, &out));
  }
  return out;
}

}  // namespace

StatusOr<std::unique_ptr<Store>> Store::open(const std::string& dir, const Config& cfg, Env* env_in)
{
  Env& env = env_in != nullptr ? *env_in : Env::posix();
  TDB_TRY(cfg.validate());
  TDB_TRY(env.create_dir(dir));

  auto store = std::unique_ptr<Store>{new Store{env, dir, cfg}};

  // CONFIG: structural parameters must match across opens.
  const std::string config_path = dir + "/CONFIG";
  if (env.file_exists(config_path)) {
    TDB_TRY_ASSIGN(std::string text, read_whole_file(env, config_path));
    TDB_TRY_ASSIGN(Config persisted, Config::from_json(text));
    if (!persisted.structurally_equal(cfg)) {
      return Status::open_failure("CONFIG mismatch: structural parameters differ from existing store");
    }
  } else {
    TDB_TRY_ASSIGN(std::unique_ptr<File> file, env.open_file(config_path, /*create=*/true));
    TDB_TRY(file->pwrite(0, cfg.to_json()));
    TDB_TRY(file->sync());
  }

  TDB_TRY_ASSIGN(store->manifest_, Manifest::open(env, dir + "/MANIFEST", &store->stats_));
  const Manifest::Recovered& rec = store->manifest_->recovered();

  TDB_TRY_ASSIGN(store->pages_, PageStore::open(env, dir, PageStore::Options::from_config(cfg), &store->stats_));
  store->pages_->reset_refcounts(rec.refcounts);

  store->pipeline_ =
      std::make_unique<CheckpointPipeline>(*store->pages_, *store->manifest_, cfg, &store->stats_);
  TDB_TRY(store->pipeline_->load_base(Checkpoint{PageId{rec.root_page}, rec.seq_upper_bound, rec.generation}));

  // WAL tail replay: updates past the checkpoint's coverage land in a
  // fresh memtable; everything older is already durable in pages.
  Wal::Options wal_opts;
  wal_opts.block_bytes = cfg.wal_block_bytes;
  wal_opts.poll_micros = cfg.wal_poll_micros;
  const std::string wal_path = dir + "/WAL";
  std::vector<Update> replay;
  u64 max_seq = rec.seq_upper_bound;
  if (env.file_exists(wal_path)) {
    TDB_TRY_ASSIGN(Wal::RecoveredLog log, Wal::recover(env, wal_path, wal_opts));
    max_seq = std::max(max_seq, log.max_seq);
    replay = std::move(log.updates);
  }
  TDB_TRY_ASSIGN(store->wal_,
                 Wal::open(env, wal_path, wal_opts, &store->stats_, /*next_seq=*/max_seq + 1,
                           /*durable_seq=*/max_seq));
  store->wal_->set_trim_limit(rec.seq_upper_bound);

  store->active_ = std::make_shared<MemTable>(store->next_table_id_.fetch_add(1));
  for (const Update& u : replay) {
    if (u.seq <= rec.seq_upper_bound) {
      continue;
    }
    store->active_->insert(u.key, u.value, u.seq);
  }

  store->chi_.store(cfg.chi, std::memory_order_relaxed);

  if (store->manifest_->file_bytes() > 8ull * 1024 * 1024) {
    TDB_TRY(store->manifest_->compact(env, dir + "/MANIFEST"));
  }
  return store;
}

Store::~Store()
{
  (void)close();
}

std::shared_ptr<MemTable> Store::active_table()
{
  std::shared_lock<std::shared_mutex> lock{active_mu_};
  return active_;
}

Status Store::put(std::string_view key, std::string_view value)
{
  if (value.size() > cfg_.max_value_bytes()) {
    return Status::invalid_argument("value exceeds size limit");
  }
  return put_impl(key, Value::of(std::string{value}));
}

Status Store::del(std::string_view key)
{
  return put_impl(key, Value::tombstone());
}

Status Store::put_impl(std::string_view key, const Value& value)
{
  if (key.size() < kMinKeyBytes || key.size() > kMaxKeyBytes) {
    return Status::invalid_argument("key length must be in [1, 1024]");
  }

  u64 bytes_for_rotation_check = 0;
  {
    std::shared_lock<std::shared_mutex> epoch{epoch_mu_};
    TDB_TRY_ASSIGN(u64 seq, wal_->append(key, value));
    stats_.user_bytes_in.fetch_add(key.size() + value.size(), std::memory_order_relaxed);
    stats_.n_keys.fetch_add(1, std::memory_order_relaxed);

    std::shared_ptr<MemTable> mt = active_table();
    while (mt->insert(key, value, seq) == MemTable::InsertResult::kFinalized) {
      std::this_thread::yield();
      mt = active_table();
    }
    bytes_for_rotation_check = mt->approx_bytes();
  }

  if (bytes_for_rotation_check >= cfg_.memtable_threshold_bytes()) {
    return maybe_rotate();
  }
  return Status::OK();
}

Status Store::maybe_rotate()
{
  std::lock_guard<std::mutex> pipeline_lock{pipeline_mu_};
  if (active_table()->approx_bytes() < cfg_.memtable_threshold_bytes()) {
    return Status::OK();  // raced with another rotation
  }
  return rotate_locked(/*forced=*/false);
}

Status Store::rotate_locked(bool forced)
{
  std::shared_ptr<MemTable> table = active_table();
  if (table->entry_count() == 0) {
    return Status::OK();
  }
  if (!forced && table->approx_bytes() < cfg_.memtable_threshold_bytes()) {
    return Status::OK();
  }

  Batch batch;
  {
    std::unique_lock<std::shared_mutex> epoch{epoch_mu_};
    batch = table->finalize();
    deltas_.push_newest(table);
    std::unique_lock<std::shared_mutex> active_lock{active_mu_};
    active_ = std::make_shared<MemTable>(next_table_id_.fetch_add(1));
  }

  if (!batch.empty()) {
    std::unique_lock<std::shared_mutex> tree_lock{tree_mu_};
    TDB_TRY(pipeline_->apply_batch(batch));
    last_applied_table_id_ = table->id();
  }

  if (pipeline_->batches_applied() >= chi_.load(std::memory_order_relaxed)) {
    return externalize_locked();
  }
  return Status::OK();
}

Status Store::externalize_locked()
{
  if (pipeline_->batches_applied() == 0) {
    return Status::OK();
  }
  const u64 covered_table = last_applied_table_id_;
  Checkpoint ckpt;
  {
    std::unique_lock<std::shared_mutex> tree_lock{tree_mu_};
    TDB_TRY_ASSIGN(ckpt, pipeline_->externalize());
  }
  deltas_.prune_through(covered_table);
  wal_->set_trim_limit(ckpt.seq_upper_bound);
  StatusOr<u64> reclaimed = wal_->trim(ckpt.seq_upper_bound);
  if (!reclaimed.ok()) {
    return reclaimed.status();
  }
  return Status::OK();
}

StatusOr<std::optional<std::string>> Store::get(std::string_view key)
{
  using Result = std::optional<std::string>;
  if (key.size() < kMinKeyBytes || key.size() > kMaxKeyBytes) {
    return Status::invalid_argument("key length must be in [1, 1024]");
  }

  MemTable::GetResult r = active_table()->get(key);
  if (r.state == MemTable::GetState::kFound) {
    return Result{std::move(r.value)};
  }
  if (r.state == MemTable::GetState::kDeleted) {
    return Result{std::nullopt};
  }

  for (const auto& table : deltas_.snapshot()) {
    r = table->get(key);
    if (r.state == MemTable::GetState::kFound) {
      return Result{std::move(r.value)};
    }
    if (r.state == MemTable::GetState::kDeleted) {
      return Result{std::nullopt};
    }
  }

  std::shared_lock<std::shared_mutex> tree_lock{tree_mu_};
  TDB_TRY_ASSIGN(QueryResult q, pipeline_->tree().point_query(pipeline_->pending_root(), key));
  if (q.state == PointLookup::kFound) {
    return Result{std::move(q.value)};
  }
  return Result{std::nullopt};
}

StatusOr<std::vector<std::pair<std::string, std::string>>> Store::scan(std::string_view start, size_t limit)
{
  std::vector<std::pair<std::string, std::string>> out;
  if (limit == 0) {
    return out;
  }

  std::shared_lock<std::shared_mutex> tree_lock{tree_mu_};

  // Sources ordered newest first: active table, deltas, then the tree.
  struct MtSource {
    std::vector<Update> entries;
    size_t pos = 0;
  };
  std::vector<MtSource> mt_sources;
  {
    MtSource src;
    src.entries = active_table()->snapshot();
    mt_sources.push_back(std::move(src));
  }
  for (const auto& table : deltas_.snapshot()) {
    MtSource src;
    src.entries = table->snapshot();
    mt_sources.push_back(std::move(src));
  }
  for (MtSource& src : mt_sources) {
    const auto cmp = [](const Update& u, std::string_view k) { return std::string_view{u.key} < k; };
    src.pos = std::lower_bound(src.entries.begin(), src.entries.end(), start, cmp) - src.entries.begin();
  }

  TreeScanner scanner{pipeline_->tree(), pipeline_->pending_root()};
  TDB_TRY(scanner.seek(start));
  std::optional<std::pair<std::string, std::string>> tree_head;
  TDB_TRY_ASSIGN(tree_head, scanner.next());

  const u64 tree_rank = mt_sources.size();
  struct Item {
    std::string_view key;
    u64 rank;
  };

  while (out.size() < limit) {
    // Find the smallest key across sources; lowest rank wins ties.
    std::optional<Item> best;
    for (u64 i = 0; i < mt_sources.size(); ++i) {
      MtSource& src = mt_sources[i];
      if (src.pos >= src.entries.size()) {
        continue;
      }
      std::string_view k = src.entries[src.pos].key;
      if (!best.has_value() || k < best->key) {
        best = Item{k, i};
      }
    }
    if (tree_head.has_value()) {
      std::string_view k = tree_head->first;
      if (!best.has_value() || k < best->key) {
        best = Item{k, tree_rank};
      }
    }
    if (!best.has_value()) {
      break;
    }

    const std::string key{best->key};
    bool emitted = false;
    if (best->rank < tree_rank) {
      const Update& winner = mt_sources[best->rank].entries[mt_sources[best->rank].pos];
      if (!winner.value.is_tombstone()) {
        out.emplace_back(key, std::string{winner.value.bytes()});
        emitted = true;
      }
    } else {
      out.emplace_back(key, std::move(tree_head->second));
      emitted = true;
    }
    (void)emitted;

    // Advance every source sitting on this key.
    for (MtSource& src : mt_sources) {
      while (src.pos < src.entries.size() && std::string_view{src.entries[src.pos].key} == std::string_view{key}) {
        src.pos += 1;
      }
    }
    if (tree_head.has_value() && tree_head->first == key) {
      TDB_TRY_ASSIGN(tree_head, scanner.next());
    }
  }
  return out;
}

StatusOr<u64> Store::sync_wal()
{
  return wal_->flush_blocks();
}

Status Store::flush()
{
  std::lock_guard<std::mutex> pipeline_lock{pipeline_mu_};
  StatusOr<u64> synced = wal_->flush_blocks();
  if (!synced.ok()) {
    return synced.status();
  }
  TDB_TRY(rotate_locked(/*forced=*/true));
  return externalize_locked();
}

StatusOr<u32> Store::set_checkpoint_distance(u32 new_chi)
{
  if (new_chi < 1) {
    return Status::invalid_parameter("checkpoint distance must be >= 1");
  }
  std::lock_guard<std::mutex> pipeline_lock{pipeline_mu_};
  if (new_chi < pipeline_->batches_applied()) {
    TDB_TRY(externalize_locked());
  }
  chi_.store(new_chi, std::memory_order_relaxed);
  return new_chi;
}

StatsSnapshot Store::stats(bool compute_space_amp)
{
  StatsSnapshot snap = StatsSnapshot::take(stats_);
  snap.disk_bytes = pages_->live_disk_bytes() + wal_->file_bytes() + manifest_->file_bytes();
  if (compute_space_amp) {
    u64 logical = 0;
    std::string cursor;
    bool first = true;
    while (true) {
      StatusOr<std::vector<std::pair<std::string, std::string>>> part =
          scan(first ? std::string_view{} : std::string_view{cursor}, 4096);
      if (!part.ok() || part->empty()) {
        break;
      }
      for (const auto& [k, v] : *part) {
        logical += k.size() + v.size();
      }
      cursor = part->back().first;
      cursor.push_back('\0');  // successor key
      first = false;
    }
    snap.logical_live_bytes = logical;
    if (logical > 0) {
      snap.space_amp_defined = true;
      snap.space_amplification = static_cast<double>(snap.disk_bytes) / static_cast<double>(logical);
    }
  }
  return snap;
}

u64 Store::approximate_memory_bytes()
{
  u64 total = pages_->cache().cached_bytes();
  total += active_table()->approx_bytes();
  for (const auto& table : deltas_.snapshot()) {
    total += table->approx_bytes();
  }
  {
    std::shared_lock<std::shared_mutex> tree_lock{tree_mu_};
    total += pipeline_->dirty_bytes();
  }
  return total;
}

Status Store::close()
{
  std::lock_guard<std::mutex> pipeline_lock{pipeline_mu_};
  if (closed_) {
    return Status::OK();
  }
  closed_ = true;
  if (wal_ == nullptr || pipeline_ == nullptr || pages_ == nullptr || active_ == nullptr) {
    return Status::OK();  // open() failed partway; nothing to persist
  }
  Status result = Status::OK();

  StatusOr<u64> synced = wal_->flush_blocks();
  if (!synced.ok()) {
    result = synced.status();
  }
  Status s = rotate_locked(/*forced=*/true);
  if (!s.ok() && result.ok()) {
    result = s;
  }
  s = externalize_locked();
  if (!s.ok() && result.ok()) {
    result = s;
  }
  s = wal_->close();
  if (!s.ok() && result.ok()) {
    result = s;
  }
  s = pages_->persist_allocation_metadata();
  if (!s.ok() && result.ok()) {
    result = s;
  }
  return result;
}

}  // namespace turtledb
