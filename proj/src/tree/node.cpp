#include <turtledb/tree/node.hpp>

#include <turtledb/core/check.hpp>

#include <algorithm>
#include <bit>

namespace turtledb {

namespace {

inline u32 sparse_pos(u64 mask, u32 pivot)
{
  return static_cast<u32>(std::popcount(mask & ((1ull << pivot) - 1)));
}

}  // namespace

u32 Segment::flushed_upper_for(u32 pivot) const
{
  if (((flushed_pivots >> pivot) & 1) == 0) {
    return 0;
  }
  return flushed_upper[sparse_pos(flushed_pivots, pivot)];
}

void Segment::set_flushed_upper(u32 pivot, u32 bound)
{
  const u32 pos = sparse_pos(flushed_pivots, pivot);
  if ((flushed_pivots >> pivot) & 1) {
    flushed_upper[pos] = bound;
  } else {
    flushed_pivots |= (1ull << pivot);
    flushed_upper.insert(flushed_upper.begin() + pos, bound);
  }
}

void Segment::clear_flushed(u32 pivot)
{
  if (((flushed_pivots >> pivot) & 1) == 0) {
    return;
  }
  const u32 pos = sparse_pos(flushed_pivots, pivot);
  flushed_upper.erase(flushed_upper.begin() + pos);
  flushed_pivots &= ~(1ull << pivot);
}

u64 Segment::active_bytes_for(u32 pivot) const
{
  if (((active_pivots >> pivot) & 1) == 0) {
    return 0;
  }
  return active_bytes[sparse_pos(active_pivots, pivot)];
}

void Segment::set_active_bytes(u32 pivot, u64 bytes)
{
  const u32 pos = sparse_pos(active_pivots, pivot);
  if ((active_pivots >> pivot) & 1) {
    active_bytes[pos] = bytes;
  } else {
    active_pivots |= (1ull << pivot);
    active_bytes.insert(active_bytes.begin() + pos, bytes);
  }
}

void Segment::clear_active(u32 pivot)
{
  if (((active_pivots >> pivot) & 1) == 0) {
    return;
  }
  const u32 pos = sparse_pos(active_pivots, pivot);
  active_bytes.erase(active_bytes.begin() + pos);
  active_pivots &= ~(1ull << pivot);
}

void Segment::remap_pivot_split(u32 pivot, u32 fan_out, const std::vector<u32>& entry_cuts,
                                const std::vector<u64>& bytes_per_part)
{
  TDB_CHECK_EQ(entry_cuts.size(), fan_out - 1);
  TDB_CHECK_EQ(bytes_per_part.size(), fan_out);

  const bool was_active = pivot_active(pivot);
  const u32 old_bound = flushed_upper_for(pivot);

  // Detach old metadata for `pivot`, shift everything above it.
  const u64 high_active = active_pivots >> (pivot + 1);
  const u64 high_flushed = flushed_pivots >> (pivot + 1);
  const u64 low_mask = (1ull << pivot) - 1;

  std::vector<u64> new_active_bytes;
  std::vector<u32> new_flushed_upper;
  u64 new_active = active_pivots & low_mask;
  u64 new_flushed = flushed_pivots & low_mask;

  for (u32 p = 0; p < pivot; ++p) {
    if ((active_pivots >> p) & 1) {
      new_active_bytes.push_back(active_bytes_for(p));
    }
    if ((flushed_pivots >> p) & 1) {
      new_flushed_upper.push_back(flushed_upper_for(p));
    }
  }

  if (was_active) {
    // The split pivots own consecutive entry sub-ranges; the flushed bound
    // falls in exactly one of them (parts before it are fully flushed,
    // parts after it are untouched).
    for (u32 j = 0; j < fan_out; ++j) {
      const u32 part_begin = j == 0 ? 0 : entry_cuts[j - 1];  // relative cut markers
      const u32 part_end = j + 1 < fan_out ? entry_cuts[j] : entry_count;
      const bool part_active = bytes_per_part[j] > 0;
      if (part_active) {
        new_active |= (1ull << (pivot + j));
        new_active_bytes.push_back(bytes_per_part[j]);
        if (old_bound > part_begin && old_bound < part_end) {
          new_flushed |= (1ull << (pivot + j));
          new_flushed_upper.push_back(old_bound);
        }
      }
    }
  }

  for (u32 p = pivot + 1; p < 64; ++p) {
    if ((active_pivots >> p) & 1) {
      new_active_bytes.push_back(active_bytes_for(p));
    }
    if ((flushed_pivots >> p) & 1) {
      new_flushed_upper.push_back(flushed_upper_for(p));
    }
  }
  TDB_CHECK_LT(pivot + fan_out, 64u);
  new_active |= high_active << (pivot + fan_out);
  new_flushed |= high_flushed << (pivot + fan_out);

  active_pivots = new_active;
  flushed_pivots = new_flushed;
  active_bytes = std::move(new_active_bytes);
  flushed_upper = std::move(new_flushed_upper);
}

void Segment::restrict_pivots(u32 begin, u32 end)
{
  std::vector<u64> new_active_bytes;
  std::vector<u32> new_flushed_upper;
  u64 new_active = 0;
  u64 new_flushed = 0;
  for (u32 p = begin; p < end; ++p) {
    if ((active_pivots >> p) & 1) {
      new_active |= (1ull << (p - begin));
      new_active_bytes.push_back(active_bytes_for(p));
    }
    if ((flushed_pivots >> p) & 1) {
      new_flushed |= (1ull << (p - begin));
      new_flushed_upper.push_back(flushed_upper_for(p));
    }
  }
  active_pivots = new_active;
  flushed_pivots = new_flushed;
  active_bytes = std::move(new_active_bytes);
  flushed_upper = std::move(new_flushed_upper);
}

void Segment::shift_pivots_up(u32 amount)
{
  active_pivots <<= amount;
  flushed_pivots <<= amount;
}

u32 Node::pivot_for_key(std::string_view key) const
{
  // upper_bound over separators pivot_keys[1..count).
  u32 lo = 0;
  u32 hi = pivot_count();
  while (hi - lo > 1) {
    const u32 mid = lo + (hi - lo) / 2;
    if (std::string_view{pivot_keys[mid]} <= key) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

u32 Node::total_segments() const
{
  u32 n = 0;
  for (const BufferLevel& level : levels) {
    n += static_cast<u32>(level.segments.size());
  }
  return n;
}

u64 Node::total_buffered_bytes() const
{
  u64 total = 0;
  for (u64 b : pending_bytes) {
    total += b;
  }
  return total;
}

void Node::recompute_pending()
{
  pending_bytes.assign(pivot_count(), 0);
  for (const BufferLevel& level : levels) {
    for (const Segment& seg : level.segments) {
      for (u32 p = 0; p < pivot_count(); ++p) {
        if (seg.pivot_active(p)) {
          pending_bytes[p] += seg.active_bytes_for(p);
        }
      }
    }
  }
}

void Node::sweep_inactive_segments(std::vector<PageId>* released)
{
  for (BufferLevel& level : levels) {
    auto it = level.segments.begin();
    while (it != level.segments.end()) {
      if (it->active_pivots == 0) {
        if (released != nullptr && it->page.valid()) {
          released->push_back(it->page);
        }
        it = level.segments.erase(it);
      } else {
        ++it;
      }
    }
  }
}

std::pair<u32, u32> run_range_for(const EntryRun& run, std::string_view lower,
                                  std::optional<std::string_view> upper)
{
  const auto cmp = [](const Update& u, std::string_view k) { return std::string_view{u.key} < k; };
  const auto lo_it = std::lower_bound(run.entries.begin(), run.entries.end(), lower, cmp);
  const auto hi_it =
      upper.has_value() ? std::lower_bound(run.entries.begin(), run.entries.end(), *upper, cmp) : run.entries.end();
  return {static_cast<u32>(lo_it - run.entries.begin()), static_cast<u32>(hi_it - run.entries.begin())};
}

Segment make_segment(const Node& owner, RunRef run)
{
  Segment seg;
  seg.entry_count = static_cast<u32>(run->entries.size());
  TDB_CHECK_GT(seg.entry_count, 0u);
  seg.min_key = run->entries.front().key;
  seg.max_key = run->entries.back().key;

  // Walk entries once, accumulating bytes per owning pivot.
  u32 pivot = owner.pivot_for_key(seg.min_key);
  u64 bytes = 0;
  for (const Update& u : run->entries) {
    while (true) {
      const auto upper = owner.pivot_upper(pivot);
      if (!upper.has_value() || std::string_view{u.key} < *upper) {
        break;
      }
      if (bytes > 0) {
        seg.set_active_bytes(pivot, bytes);
        bytes = 0;
      }
      ++pivot;
    }
    bytes += encoded_entry_bytes(u);
  }
  if (bytes > 0) {
    seg.set_active_bytes(pivot, bytes);
  }
  seg.run = std::move(run);
  return seg;
}

}  // namespace turtledb
