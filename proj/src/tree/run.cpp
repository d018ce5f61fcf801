#include <turtledb/tree/run.hpp>

#include <turtledb/core/check.hpp>

#include <algorithm>

namespace turtledb {

std::vector<std::vector<Update>> split_run_balanced(const std::vector<Update>& entries, size_t parts,
                                                    u64 max_part_bytes)
{
  std::vector<std::vector<Update>> out;
  if (entries.empty()) {
    return out;
  }
  u64 remaining = encoded_run_bytes(entries);
  parts = std::max<size_t>(1, std::min(parts, entries.size()));

  size_t i = 0;
  while (i < entries.size()) {
    const size_t parts_left = parts > out.size() ? parts - out.size() : 1;
    const u64 target = std::max<u64>(1, remaining / parts_left);

    std::vector<Update> part;
    u64 part_bytes = 0;
    while (i < entries.size()) {
      const u64 sz = encoded_entry_bytes(entries[i]);
      if (!part.empty()) {
        if (part_bytes + sz > max_part_bytes) {
          break;
        }
        if (parts_left > 1) {
          // Stop when adding the entry lands farther from the balance
          // target than stopping here.
          const i64 before = static_cast<i64>(target) - static_cast<i64>(part_bytes);
          const i64 after = static_cast<i64>(part_bytes + sz) - static_cast<i64>(target);
          if (after >= before) {
            break;
          }
        }
      }
      part.push_back(entries[i]);
      part_bytes += sz;
      ++i;
    }
    TDB_CHECK(!part.empty());
    remaining -= part_bytes;
    out.push_back(std::move(part));
  }
  return out;
}

}  // namespace turtledb
