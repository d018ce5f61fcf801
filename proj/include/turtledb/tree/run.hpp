#pragma once

#include <turtledb/core/types.hpp>

#include <memory>
#include <vector>

namespace turtledb {

// An immutable, key-sorted run of updates. Shared by reference between
// buffer segments (and across node splits) so merges never copy payload
// bytes.
struct EntryRun {
  std::vector<Update> entries;
  u64 logical_bytes = 0;

  static std::shared_ptr<const EntryRun> make(std::vector<Update> entries)
  {
    auto run = std::make_shared<EntryRun>();
    run->logical_bytes = encoded_run_bytes(entries);
    run->entries = std::move(entries);
    return run;
  }
};

using RunRef = std::shared_ptr<const EntryRun>;

// Splits a sorted run into byte-balanced consecutive parts. `parts` is the
// desired piece count; more pieces are produced only if a piece would
// otherwise exceed max_part_bytes, fewer if there are not enough entries.
std::vector<std::vector<Update>> split_run_balanced(const std::vector<Update>& entries, size_t parts,
                                                    u64 max_part_bytes);

}  // namespace turtledb
