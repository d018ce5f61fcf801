#include <turtledb/pagestore/page_cache.hpp>

#include <algorithm>

namespace turtledb {

std::shared_ptr<const std::string> PageCache::get(const ShardKey& key)
{
  std::lock_guard<std::mutex> lock{mu_};
  auto it = index_.find(key);
  if (it == index_.end()) {
    return nullptr;
  }
  Entry& e = ring_[it->second];
  e.priority = e.priority_class;
  return e.bytes;
}

void PageCache::insert(const ShardKey& key, std::shared_ptr<const std::string> bytes, u8 priority_class)
{
  std::lock_guard<std::mutex> lock{mu_};
  const u64 sz = bytes->size();
  auto it = index_.find(key);
  if (it != index_.end()) {
    Entry& e = ring_[it->second];
    total_bytes_ -= e.bytes->size();
    e.bytes = std::move(bytes);
    e.priority_class = priority_class;
    e.priority = priority_class;
    total_bytes_ += sz;
    evict_to_fit_locked(0);
    return;
  }

  if (sz > budget_bytes_) {
    return;
  }
  evict_to_fit_locked(sz);
  if (total_bytes_ + sz > budget_bytes_) {
    return;  // nothing evictable; stay within budget
  }

  size_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
  } else {
    slot = ring_.size();
    ring_.emplace_back();
  }
  Entry& e = ring_[slot];
  e.key = key;
  e.bytes = std::move(bytes);
  e.priority_class = priority_class;
  e.priority = priority_class;
  e.pin_count = 0;
  e.occupied = true;
  total_bytes_ += sz;
  index_[key] = slot;
  page_slots_[key.page].push_back(slot);
}

std::optional<ShardKey> PageCache::evict_step()
{
  std::lock_guard<std::mutex> lock{mu_};
  return evict_step_locked();
}

std::optional<ShardKey> PageCache::evict_step_locked()
{
  if (index_.empty() || ring_.empty()) {
    return std::nullopt;
  }
  // Bounded by the total priority in the ring plus one full sweep; a
  // sweep that finds only pinned entries gives up.
  size_t steps_since_progress = 0;
  const size_t ring_size = ring_.size();
  size_t max_steps = ring_size * 2;
  for (const Entry& e : ring_) {
    if (e.occupied) {
      max_steps += e.priority;
    }
  }
  for (size_t step = 0; step < max_steps; ++step) {
    if (hand_ >= ring_.size()) {
      hand_ = 0;
    }
    Entry& e = ring_[hand_];
    if (!e.occupied) {
      ++hand_;
      if (++steps_since_progress > ring_size) {
        return std::nullopt;
      }
      continue;
    }
    if (e.pin_count > 0) {
      ++hand_;
      if (++steps_since_progress > ring_size) {
        return std::nullopt;
      }
      continue;
    }
    steps_since_progress = 0;
    if (e.priority > 0) {
      --e.priority;
      ++hand_;
      continue;
    }
    ShardKey victim = e.key;
    remove_slot_locked(hand_);
    ++hand_;
    return victim;
  }
  return std::nullopt;
}

void PageCache::evict_to_fit_locked(u64 incoming_bytes)
{
  while (total_bytes_ + incoming_bytes > budget_bytes_) {
    if (!evict_step_locked().has_value()) {
      break;
    }
  }
}

void PageCache::remove_slot_locked(size_t slot)
{
  Entry& e = ring_[slot];
  total_bytes_ -= e.bytes->size();
  index_.erase(e.key);
  auto pit = page_slots_.find(e.key.page);
  if (pit != page_slots_.end()) {
    auto& vec = pit->second;
    vec.erase(std::remove(vec.begin(), vec.end(), slot), vec.end());
    if (vec.empty()) {
      page_slots_.erase(pit);
    }
  }
  e.bytes.reset();
  e.occupied = false;
  e.pin_count = 0;
  free_slots_.push_back(slot);
}

void PageCache::erase_page(u64 page)
{
  std::lock_guard<std::mutex> lock{mu_};
  auto it = page_slots_.find(page);
  if (it == page_slots_.end()) {
    return;
  }
  std::vector<size_t> slots = it->second;
  for (size_t slot : slots) {
    if (ring_[slot].occupied && ring_[slot].key.page == page) {
      remove_slot_locked(slot);
    }
  }
}

bool PageCache::pin(const ShardKey& key)
{
  std::lock_guard<std::mutex> lock{mu_};
  auto it = index_.find(key);
  if (it == index_.end()) {
    return false;
  }
  ring_[it->second].pin_count++;
  return true;
}

void PageCache::unpin(const ShardKey& key)
{
  std::lock_guard<std::mutex> lock{mu_};
  auto it = index_.find(key);
  if (it == index_.end()) {
    return;
  }
  Entry& e = ring_[it->second];
  if (e.pin_count > 0) {
    e.pin_count--;
  }
}

}  // namespace turtledb
