#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace turtledb {

using u8 = uint8_t;
using u16 = uint16_t;
using u32 = uint32_t;
using u64 = uint64_t;
using i32 = int32_t;
using i64 = int64_t;

// Keys are byte strings ordered lexicographically (std::string compares
// bytes as unsigned). Valid user keys are 1..1024 bytes; the empty string
// is reserved as the -infinity pivot bound sentinel.
using Key = std::string;

inline constexpr size_t kMinKeyBytes = 1;
inline constexpr size_t kMaxKeyBytes = 1024;

// A value payload: either bytes (shared, immutable) or a tombstone.
// Sharing the byte buffer keeps merge/compaction passes copy-free; the
// bytes are only materialized into page buffers at externalize time.
class Value
{
 public:
  Value() : bytes_{nullptr} {}  // tombstone

  static Value tombstone() { return Value{}; }

  static Value of(std::string bytes)
  {
    Value v;
    v.bytes_ = std::make_shared<const std::string>(std::move(bytes));
    return v;
  }

  static Value of_shared(std::shared_ptr<const std::string> bytes)
  {
    Value v;
    v.bytes_ = std::move(bytes);
    return v;
  }

  bool is_tombstone() const { return bytes_ == nullptr; }

  std::string_view bytes() const
  {
    static const std::string kEmpty;
    return bytes_ ? std::string_view{*bytes_} : std::string_view{kEmpty};
  }

  size_t size() const { return bytes_ ? bytes_->size() : 0; }

  bool operator==(const Value& other) const
  {
    if (is_tombstone() || other.is_tombstone()) {
      return is_tombstone() == other.is_tombstone();
    }
    return *bytes_ == *other.bytes_;
  }

 private:
  std::shared_ptr<const std::string> bytes_;
};

// A single keyed edit. seq numbers are unique per store and strictly
// increasing in assignment order.
struct Update {
  Key key;
  Value value;
  u64 seq = 0;
};

// Fixed per-entry accounting overhead used for all buffered-byte math
// (slot, seq, op byte, index amortization). One constant everywhere keeps
// pending-byte bookkeeping and split decisions consistent.
inline constexpr u64 kEntryOverheadBytes = 32;

inline u64 encoded_entry_bytes(const Update& u)
{
  return u.key.size() + u.value.size() + kEntryOverheadBytes;
}

inline u64 encoded_run_bytes(const std::vector<Update>& entries)
{
  u64 total = 0;
  for (const Update& u : entries) {
    total += encoded_entry_bytes(u);
  }
  return total;
}

// A sorted, de-duplicated run of updates; the unit applied to the tree.
// Entries are strictly ascending by key; each entry carries the highest
// seq among the updates it de-duplicated. Tombstones are data until a
// merge whose output is a leaf.
struct Batch {
  std::vector<Update> entries;

  bool empty() const { return entries.empty(); }
  size_t size() const { return entries.size(); }
  u64 logical_bytes() const { return encoded_run_bytes(entries); }

  u64 max_seq() const
  {
    u64 m = 0;
    for (const Update& u : entries) {
      m = m > u.seq ? m : u.seq;
    }
    return m;
  }
};

}  // namespace turtledb
