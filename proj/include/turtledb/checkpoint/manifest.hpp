#pragma once

#include <turtledb/core/stats.hpp>
#include <turtledb/core/status.hpp>
#include <turtledb/util/env.hpp>

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace turtledb {

// Checkpoint manifest log. Each externalization appends a prepare record
// (generation, new root, seq upper bound, refcount deltas) followed by a
// commit record, each synced: the two-phase protocol. Recovery replays
// committed generations only; a prepare without a commit is discarded, and
// reading stops at the first torn record.
class Manifest
{
 public:
  struct Prepare {
    u64 generation = 0;
    u64 root_page = 0;
    u64 seq_upper_bound = 0;
    std::vector<std::pair<u64, i64>> deltas;
  };

  struct Recovered {
    u64 generation = 0;
    u64 root_page = 0;
    u64 seq_upper_bound = 0;
    std::unordered_map<u64, i64> refcounts;
  };

  static StatusOr<std::unique_ptr<Manifest>> open(Env& env, const std::string& path, StatsCounters* stats);

  const Recovered& recovered() const { return recovered_; }

  Status append_prepare(const Prepare& prepare);
  Status append_commit(u64 generation);

  // Rewrites the log as one synthetic prepare+commit carrying the current
  // absolute refcounts (bounds recovery time).
  Status compact(Env& env, const std::string& path);

  u64 file_bytes() const { return append_offset_; }

 private:
  Manifest(std::unique_ptr<File> file, StatsCounters* stats) : file_{std::move(file)}, stats_{stats} {}

  Status append_record(std::string_view payload);

  static constexpr u64 kMagic = 0x7464626d616e6931ull;

  std::unique_ptr<File> file_;
  StatsCounters* stats_;
  u64 append_offset_ = 0;
  Recovered recovered_;  // tracks the latest committed state
  std::unordered_map<u64, Prepare> pending_prepares_;
};

}  // namespace turtledb
