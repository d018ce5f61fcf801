#pragma once

#include <turtledb/core/stats.hpp>
#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>
#include <turtledb/util/env.hpp>

#include <memory>
#include <mutex>
#include <queue>
#include <string>
#include <thread>
#include <vector>

namespace turtledb {

// Write-ahead log of per-key updates. Producers encode records into
// per-slot block buffers (seq from an atomic counter, no I/O on the append
// path); a background flusher periodically steals and writes sealed
// blocks. Blocks are fixed-size with a content hash in the header, so a
// torn tail block is detected and skipped at recovery.
//
// File layout: header {magic, version, hash algo, block_bytes,
// base_block_seq, trim_horizon}, then fixed-size blocks:
//   {block_seq u64, record_count u32, payload_bytes u32, hash u64}
//   followed by records {key_len u32, value_len_and_op u32, seq u64,
//   key, value} and zero padding. The hash covers every byte after the
//   24-byte block header.
class Wal
{
 public:
  struct Options {
    u64 block_bytes = 64 * 1024;
    u64 poll_micros = 1000;
    bool start_flusher = true;
  };

  struct RecoveredLog {
    std::vector<Update> updates;  // seq-ordered, seqs > trim horizon
    u64 max_seq = 0;
    u64 next_block_seq = 0;
    u64 trim_horizon = 0;
  };

  static StatusOr<std::unique_ptr<Wal>> open(Env& env, const std::string& path, const Options& opts,
                                             StatsCounters* stats, u64 next_seq, u64 durable_seq);

  // Pure read of the log file (also used for recovery after a crash).
  static StatusOr<RecoveredLog> recover(Env& env, const std::string& path, const Options& opts);

  ~Wal();

  // Encodes the update into a producer-local block buffer and returns its
  // seq. Durability is deferred until flush_blocks.
  StatusOr<u64> append(std::string_view key, const Value& value);

  // Writes and syncs all sealed + stolen blocks; returns the highest seq
  // S such that every seq <= S is durable.
  StatusOr<u64> flush_blocks();

  u64 durable_seq() const;
  u64 next_seq() const { return next_seq_.load(std::memory_order_relaxed); }

  // Highest seq trim may reach (the latest checkpoint's coverage).
  void set_trim_limit(u64 seq);

  // Drops the longest prefix of blocks wholly covered by upto_seq by
  // rewriting the log; returns reclaimed bytes.
  StatusOr<u64> trim(u64 upto_seq);

  Status close();

  u64 file_bytes() const;

 private:
  struct Block {
    std::string payload;
    std::vector<u64> seqs;
    u32 record_count = 0;
  };

  struct Slot {
    std::mutex mu;
    std::unique_ptr<Block> block;
  };

  static constexpr u64 kMagic = 0x74646277616c3131ull;
  static constexpr u32 kVersion = 1;
  static constexpr u32 kHashAlgoFnv1a64 = 1;
  static constexpr u64 kHeaderBytes = 48;
  static constexpr u64 kBlockHeaderBytes = 24;
  static constexpr size_t kSlotCount = 16;

  Wal(Env& env, std::string path, const Options& opts, StatsCounters* stats)
      : env_{env}, path_{std::move(path)}, opts_{opts}, stats_{stats}
  {
  }

  Status write_header();
  void seal_block_locked(Slot& slot);  // slot.mu held
  void flusher_main(std::stop_token token);
  u64 payload_capacity() const { return opts_.block_bytes - kBlockHeaderBytes; }

  Env& env_;
  std::string path_;
  Options opts_;
  StatsCounters* stats_;
  std::unique_ptr<File> file_;

  std::atomic<u64> next_seq_{1};
  std::atomic<u64> durable_seq_{0};
  std::atomic<u64> trim_limit_{0};

  Slot slots_[kSlotCount];

  std::mutex seal_mu_;  // serializes block-seq assignment + queue pushes
  u64 next_block_seq_ = 0;
  u64 base_block_seq_ = 0;
  u64 trim_horizon_ = 0;
  std::vector<std::pair<u64, std::unique_ptr<Block>>> sealed_;

  std::mutex flush_mu_;  // one flusher at a time; also taken by trim
  std::priority_queue<u64, std::vector<u64>, std::greater<u64>> flushed_seqs_;

  std::jthread flusher_;
};

}  // namespace turtledb
