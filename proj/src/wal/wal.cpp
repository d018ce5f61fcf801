#include <turtledb/wal/wal.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>
#include <turtledb/core/hash.hpp>

#include <algorithm>
#include <chrono>
#include <functional>

namespace turtledb {

namespace {

u64 slot_for_thread()
{
  return std::hash<std::thread::id>{}(std::this_thread::get_id());
}

}  // namespace

Status Wal::write_header()
{
  std::string header;
  put_u64(header, kMagic);
  put_u32(header, kVersion);
  put_u32(header, kHashAlgoFnv1a64);
  put_u64(header, opts_.block_bytes);
  put_u64(header, base_block_seq_);
  put_u64(header, trim_horizon_);
  header.resize(kHeaderBytes, '\0');
  TDB_TRY(file_->pwrite(0, header));
  return Status::OK();
}

StatusOr<std::unique_ptr<Wal>> Wal::open(Env& env, const std::string& path, const Options& opts,
                                         StatsCounters* stats, u64 next_seq, u64 durable_seq)
{
  auto wal = std::unique_ptr<Wal>{new Wal{env, path, opts, stats}};
  const bool existed = env.file_exists(path);
  TDB_TRY_ASSIGN(wal->file_, env.open_file(path, /*create=*/true));
  if (existed) {
    TDB_TRY_ASSIGN(RecoveredLog log, recover(env, path, opts));
    std::string header;
    TDB_TRY(wal->file_->pread(0, kHeaderBytes, &header));
    const u64 base = get_u64(header.data() + 24);
    wal->base_block_seq_ = base;
    wal->next_block_seq_ = log.next_block_seq;
    wal->trim_horizon_ = log.trim_horizon;
    // Drop any torn tail so appended blocks cannot sit after garbage.
    TDB_TRY(wal->file_->truncate(kHeaderBytes + (log.next_block_seq - base) * opts.block_bytes));
  } else {
    TDB_TRY(wal->write_header());
    TDB_TRY(wal->file_->sync());
  }
  wal->next_seq_.store(next_seq, std::memory_order_relaxed);
  wal->durable_seq_.store(durable_seq, std::memory_order_relaxed);
  wal->trim_limit_.store(durable_seq, std::memory_order_relaxed);
  if (opts.start_flusher) {
    wal->flusher_ = std::jthread{[w = wal.get()](std::stop_token token) { w->flusher_main(token); }};
  }
  return wal;
}

Wal::~Wal()
{
  (void)close();
}

Status Wal::close()
{
  if (flusher_.joinable()) {
    flusher_.request_stop();
    flusher_.join();
  }
  if (file_ != nullptr) {
    StatusOr<u64> s = flush_blocks();
    if (!s.ok()) {
      return s.status();
    }
  }
  return Status::OK();
}

void Wal::flusher_main(std::stop_token token)
{
  while (!token.stop_requested()) {
    std::this_thread::sleep_for(std::chrono::microseconds(opts_.poll_micros));
    (void)flush_blocks();  // IO errors are retried on the next poll
  }
}

StatusOr<u64> Wal::append(std::string_view key, const Value& value)
{
  const u64 value_len = value.is_tombstone() ? 0 : value.size();
  const u64 record_bytes = 16 + key.size() + value_len;
  if (record_bytes > payload_capacity()) {
    return Status::record_too_large("wal record exceeds block payload");
  }

  Slot& slot = slots_[slot_for_thread() % kSlotCount];
  std::lock_guard<std::mutex> lock{slot.mu};

  if (slot.block != nullptr && slot.block->payload.size() + record_bytes > payload_capacity()) {
    seal_block_locked(slot);
  }
  if (slot.block == nullptr) {
    slot.block = std::make_unique<Block>();
    slot.block->payload.reserve(payload_capacity());
  }

  const u64 seq = next_seq_.fetch_add(1, std::memory_order_relaxed);
  Block& block = *slot.block;
  put_u32(block.payload, static_cast<u32>(key.size()));
  u32 len_and_op = static_cast<u32>(value_len);
  if (value.is_tombstone()) {
    len_and_op |= 0x80000000u;
  }
  put_u32(block.payload, len_and_op);
  put_u64(block.payload, seq);
  block.payload.append(key);
  if (!value.is_tombstone()) {
    block.payload.append(value.bytes());
  }
  block.record_count += 1;
  block.seqs.push_back(seq);

  if (block.payload.size() == payload_capacity()) {
    seal_block_locked(slot);
  }
  return seq;
}

void Wal::seal_block_locked(Slot& slot)
{
  if (slot.block == nullptr || slot.block->record_count == 0) {
    return;
  }
  std::lock_guard<std::mutex> lock{seal_mu_};
  sealed_.emplace_back(next_block_seq_++, std::move(slot.block));
}

StatusOr<u64> Wal::flush_blocks()
{
  std::lock_guard<std::mutex> flush_lock{flush_mu_};

  // Steal whatever the producers have buffered, then drain the sealed
  // queue. Seals are serialized, so the drained set is a contiguous range
  // of block seqs.
  for (Slot& slot : slots_) {
    std::lock_guard<std::mutex> lock{slot.mu};
    seal_block_locked(slot);
  }
  std::vector<std::pair<u64, std::unique_ptr<Block>>> to_write;
  {
    std::lock_guard<std::mutex> lock{seal_mu_};
    to_write.swap(sealed_);
  }

  if (!to_write.empty()) {
    std::sort(to_write.begin(), to_write.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // On any write/sync error the whole batch goes back on the sealed
    // queue; no seq is reported durable until its block is synced, and
    // rewriting an already-written block is idempotent.
    const auto requeue_all = [&] {
      std::lock_guard<std::mutex> lock{seal_mu_};
      for (auto& pending : to_write) {
        sealed_.emplace_back(pending.first, std::move(pending.second));
      }
      std::sort(sealed_.begin(), sealed_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
    };

    for (auto& [block_seq, block] : to_write) {
      std::string image;
      image.reserve(opts_.block_bytes);
      put_u64(image, block_seq);
      put_u32(image, block->record_count);
      put_u32(image, static_cast<u32>(block->payload.size()));
      put_u64(image, 0);  // hash patched below
      image.append(block->payload);
      image.resize(opts_.block_bytes, '\0');
      const u64 hash = fnv1a64(image.data() + kBlockHeaderBytes, image.size() - kBlockHeaderBytes);
      encode_u64_at(image, 16, hash);

      const u64 offset = kHeaderBytes + (block_seq - base_block_seq_) * opts_.block_bytes;
      Status s = file_->pwrite(offset, image);
      if (!s.ok()) {
        requeue_all();
        return s;
      }
      if (stats_ != nullptr) {
        stats_->add_log_write(PoolKind::kWal, opts_.block_bytes);
      }
    }
    Status s = file_->sync();
    if (!s.ok()) {
      requeue_all();
      return s;
    }
    // Synced: fold the flushed seqs into the durable prefix.
    u64 durable = durable_seq_.load(std::memory_order_relaxed);
    for (auto& [block_seq, block] : to_write) {
      for (u64 seq : block->seqs) {
        flushed_seqs_.push(seq);
      }
    }
    while (!flushed_seqs_.empty() && flushed_seqs_.top() == durable + 1) {
      flushed_seqs_.pop();
      durable += 1;
    }
    durable_seq_.store(durable, std::memory_order_relaxed);
  }
  return durable_seq_.load(std::memory_order_relaxed);
}

u64 Wal::durable_seq() const
{
  return durable_seq_.load(std::memory_order_relaxed);
}

void Wal::set_trim_limit(u64 seq)
{
  trim_limit_.store(seq, std::memory_order_relaxed);
}

StatusOr<Wal::RecoveredLog> Wal::recover(Env& env, const std::string& path, const Options& opts)
{
  TDB_TRY_ASSIGN(std::unique_ptr<File> file, env.open_file(path, /*create=*/false));
  TDB_TRY_ASSIGN(u64 size, file->size());
  if (size < kHeaderBytes) {
    return Status::recovery_halt("wal header truncated");
  }
  std::string header;
  TDB_TRY(file->pread(0, kHeaderBytes, &header));
  if (get_u64(header.data()) != kMagic) {
    return Status::recovery_halt("bad wal magic");
  }
  if (get_u32(header.data() + 8) != kVersion) {
    return Status::recovery_halt("unsupported wal version");
  }
  if (get_u32(header.data() + 12) != kHashAlgoFnv1a64) {
    return Status::recovery_halt("unsupported wal hash algorithm");
  }
  const u64 block_bytes = get_u64(header.data() + 16);
  if (block_bytes != opts.block_bytes) {
    return Status::recovery_halt("wal block size mismatch");
  }

  RecoveredLog log;
  const u64 base = get_u64(header.data() + 24);
  log.trim_horizon = get_u64(header.data() + 32);

  u64 block_seq = base;
  u64 offset = kHeaderBytes;
  while (offset + block_bytes <= size) {
    std::string block;
    TDB_TRY(file->pread(offset, block_bytes, &block));
    if (get_u64(block.data()) != block_seq) {
      break;
    }
    const u32 record_count = get_u32(block.data() + 8);
    const u32 payload_bytes = get_u32(block.data() + 12);
    const u64 stored_hash = get_u64(block.data() + 16);
    if (payload_bytes > block_bytes - kBlockHeaderBytes) {
      break;
    }
    if (fnv1a64(block.data() + kBlockHeaderBytes, block.size() - kBlockHeaderBytes) != stored_hash) {
      break;  // torn block; ignore it and everything after
    }
    u64 pos = kBlockHeaderBytes;
    bool block_ok = true;
    std::vector<Update> block_updates;
    for (u32 i = 0; i < record_count; ++i) {
      if (pos + 16 > kBlockHeaderBytes + payload_bytes) {
        block_ok = false;
        break;
      }
      const u32 key_len = get_u32(block.data() + pos);
      const u32 len_and_op = get_u32(block.data() + pos + 4);
      const u64 seq = get_u64(block.data() + pos + 8);
      const bool tombstone = (len_and_op & 0x80000000u) != 0;
      const u32 value_len = len_and_op & 0x7fffffffu;
      pos += 16;
      if (pos + key_len + (tombstone ? 0 : value_len) > kBlockHeaderBytes + payload_bytes) {
        block_ok = false;
        break;
      }
      Update u;
      u.key.assign(block.data() + pos, key_len);
      pos += key_len;
      if (tombstone) {
        u.value = Value::tombstone();
      } else {
        u.value = Value::of(std::string{block.data() + pos, value_len});
        pos += value_len;
      }
      u.seq = seq;
      block_updates.push_back(std::move(u));
    }
    if (!block_ok) {
      break;
    }
    for (Update& u : block_updates) {
      log.max_seq = std::max(log.max_seq, u.seq);
      if (u.seq > log.trim_horizon) {
        log.updates.push_back(std::move(u));
      }
    }
    offset += block_bytes;
    block_seq += 1;
  }
  log.next_block_seq = block_seq;

  std::sort(log.updates.begin(), log.updates.end(), [](const Update& a, const Update& b) { return a.seq < b.seq; });
  return log;
}

StatusOr<u64> Wal::trim(u64 upto_seq)
{
  if (upto_seq == 0) {
    return u64{0};
  }
  if (upto_seq > trim_limit_.load(std::memory_order_relaxed)) {
    return Status::invalid_parameter("trim past checkpoint coverage");
  }

  std::lock_guard<std::mutex> flush_lock{flush_mu_};

  TDB_TRY_ASSIGN(u64 size, file_->size());
  std::string header;
  TDB_TRY(file_->pread(0, kHeaderBytes, &header));
  const u64 base = get_u64(header.data() + 24);

  // Find the longest prefix of durable blocks wholly <= upto_seq.
  u64 drop = 0;
  u64 offset = kHeaderBytes;
  while (offset + opts_.block_bytes <= size) {
    std::string block;
    TDB_TRY(file_->pread(offset, opts_.block_bytes, &block));
    if (get_u64(block.data()) != base + drop) {
      break;
    }
    const u32 record_count = get_u32(block.data() + 8);
    const u32 payload_bytes = get_u32(block.data() + 12);
    const u64 stored_hash = get_u64(block.data() + 16);
    if (fnv1a64(block.data() + kBlockHeaderBytes, block.size() - kBlockHeaderBytes) != stored_hash) {
      break;
    }
    u64 block_max = 0;
    u64 pos = kBlockHeaderBytes;
    for (u32 i = 0; i < record_count && pos + 16 <= kBlockHeaderBytes + payload_bytes; ++i) {
      const u32 key_len = get_u32(block.data() + pos);
      const u32 len_and_op = get_u32(block.data() + pos + 4);
      block_max = std::max(block_max, get_u64(block.data() + pos + 8));
      pos += 16 + key_len + ((len_and_op & 0x80000000u) != 0 ? 0 : (len_and_op & 0x7fffffffu));
    }
    if (block_max > upto_seq) {
      break;
    }
    drop += 1;
    offset += opts_.block_bytes;
  }
  if (drop == 0) {
    trim_horizon_ = std::max(trim_horizon_, upto_seq);
    TDB_TRY(write_header());
    TDB_TRY(file_->sync());
    return u64{0};
  }

  // Rewrite the remaining blocks into a fresh file and swap it in.
  const std::string tmp = path_ + ".tmp";
  TDB_TRY(env_.remove_file(tmp));
  TDB_TRY_ASSIGN(std::unique_ptr<File> out, env_.open_file(tmp, /*create=*/true));
  {
    std::string new_header;
    put_u64(new_header, kMagic);
    put_u32(new_header, kVersion);
    put_u32(new_header, kHashAlgoFnv1a64);
    put_u64(new_header, opts_.block_bytes);
    put_u64(new_header, base + drop);
    put_u64(new_header, std::max(trim_horizon_, upto_seq));
    new_header.resize(kHeaderBytes, '\0');
    TDB_TRY(out->pwrite(0, new_header));
  }
  u64 kept = 0;
  u64 src = kHeaderBytes + drop * opts_.block_bytes;
  while (src + opts_.block_bytes <= size) {
    std::string block;
    TDB_TRY(file_->pread(src, opts_.block_bytes, &block));
    if (get_u64(block.data()) != base + drop + kept) {
      break;  // only the valid prefix is retained
    }
    TDB_TRY(out->pwrite(kHeaderBytes + kept * opts_.block_bytes, block));
    src += opts_.block_bytes;
    kept += 1;
  }
  TDB_TRY(out->sync());
  TDB_TRY(env_.rename_file(tmp, path_));

  file_ = std::move(out);
  base_block_seq_ = base + drop;
  trim_horizon_ = std::max(trim_horizon_, upto_seq);
  TDB_TRY(write_header());
  TDB_TRY(file_->sync());
  return drop * opts_.block_bytes;
}

u64 Wal::file_bytes() const
{
  if (file_ == nullptr) {
    return 0;
  }
  StatusOr<u64> s = const_cast<File*>(file_.get())->size();
  return s.ok() ? *s : 0;
}

}  // namespace turtledb
