#include <turtledb/memtable/memtable.hpp>

#include <turtledb/core/check.hpp>

#include <algorithm>

namespace turtledb {

MemTable::InsertResult MemTable::insert(std::string_view key, const Value& value, u64 seq)
{
  std::unique_lock<std::shared_mutex> lock{mu_};
  if (finalized_) {
    return InsertResult::kFinalized;
  }
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_.emplace(Key{key}, std::make_pair(value, seq));
    bytes_.fetch_add(key.size() + value.size() + kEntryOverheadBytes, std::memory_order_relaxed);
    return InsertResult::kOk;
  }
  if (seq <= it->second.second) {
    return InsertResult::kStale;
  }
  const u64 old_bytes = it->second.first.size();
  it->second = std::make_pair(value, seq);
  const u64 new_bytes = value.size();
  if (new_bytes >= old_bytes) {
    bytes_.fetch_add(new_bytes - old_bytes, std::memory_order_relaxed);
  } else {
    bytes_.fetch_sub(old_bytes - new_bytes, std::memory_order_relaxed);
  }
  return InsertResult::kOk;
}

MemTable::GetResult MemTable::get(std::string_view key) const
{
  std::shared_lock<std::shared_mutex> lock{mu_};
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return GetResult{};
  }
  GetResult r;
  r.seq = it->second.second;
  if (it->second.first.is_tombstone()) {
    r.state = GetState::kDeleted;
  } else {
    r.state = GetState::kFound;
    r.value = std::string{it->second.first.bytes()};
  }
  return r;
}

bool MemTable::finalized() const
{
  std::shared_lock<std::shared_mutex> lock{mu_};
  return finalized_;
}

size_t MemTable::entry_count() const
{
  std::shared_lock<std::shared_mutex> lock{mu_};
  return entries_.size();
}

Batch MemTable::finalize()
{
  std::unique_lock<std::shared_mutex> lock{mu_};
  finalized_ = true;
  Batch batch;
  batch.entries.reserve(entries_.size());
  for (const auto& [key, payload] : entries_) {
    batch.entries.push_back(Update{key, payload.first, payload.second});
  }
  return batch;
}

std::vector<Update> MemTable::snapshot() const
{
  {
    std::shared_lock<std::shared_mutex> lock{mu_};
    if (finalized_ && snapshot_valid_) {
      return snapshot_cache_;
    }
  }
  std::unique_lock<std::shared_mutex> lock{mu_};
  std::vector<Update> out;
  out.reserve(entries_.size());
  for (const auto& [key, payload] : entries_) {
    out.push_back(Update{key, payload.first, payload.second});
  }
  if (finalized_) {
    snapshot_cache_ = out;
    snapshot_valid_ = true;
  }
  return out;
}

void DeltasStack::push_newest(std::shared_ptr<const MemTable> table)
{
  std::lock_guard<std::mutex> lock{mu_};
  tables_.insert(tables_.begin(), std::move(table));
}

void DeltasStack::prune_through(u64 through_id)
{
  std::lock_guard<std::mutex> lock{mu_};
  tables_.erase(std::remove_if(tables_.begin(), tables_.end(),
                               [&](const std::shared_ptr<const MemTable>& t) { return t->id() <= through_id; }),
                tables_.end());
}

std::vector<std::shared_ptr<const MemTable>> DeltasStack::snapshot() const
{
  std::lock_guard<std::mutex> lock{mu_};
  return tables_;
}

size_t DeltasStack::size() const
{
  std::lock_guard<std::mutex> lock{mu_};
  return tables_.size();
}

}  // namespace turtledb
