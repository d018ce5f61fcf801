#include <turtledb/tree/run_page.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>

#include <algorithm>

namespace turtledb {

namespace {

u32 index_entry_count(u32 count, u32 step)
{
  if (step == 0 || count == 0) {
    return 0;
  }
  return (count + step - 1) / step;
}

u64 index_region_size(const std::vector<Update>& entries, u32 step)
{
  const u32 ic = index_entry_count(static_cast<u32>(entries.size()), step);
  if (ic == 0) {
    return 0;
  }
  u64 key_bytes = 0;
  for (u32 j = 0; j < ic; ++j) {
    key_bytes += entries[static_cast<size_t>(j) * step].key.size();
  }
  return 4ull * (ic + 1) + key_bytes;
}

}  // namespace

u64 measure_run_page(const std::vector<Update>& entries, u32 index_step)
{
  const u64 count = entries.size();
  u64 key_bytes = 0;
  u64 value_bytes = 0;
  for (const Update& u : entries) {
    key_bytes += u.key.size();
    value_bytes += 1 + u.value.size();
  }
  return kRunHeaderBytes + index_region_size(entries, index_step) + 8 * (count + 1) + key_bytes + 8 * count +
         value_bytes;
}

u32 choose_index_step(const std::vector<Update>& entries, u64 page_bytes)
{
  const u64 reserve = page_bytes / 16;
  for (u32 step : {16u, 32u}) {
    if (index_region_size(entries, step) <= reserve) {
      return step;
    }
  }
  return 0;
}

StatusOr<std::string> build_run_page(const std::vector<Update>& entries, RunKind kind, u64 page_bytes)
{
  const u32 count = static_cast<u32>(entries.size());
  const u32 step = choose_index_step(entries, page_bytes);
  if (measure_run_page(entries, step) > page_bytes) {
    return Status::contract_violation("run does not fit in one page");
  }

  const u32 ic = index_entry_count(count, step);
  const u32 index_off = kRunHeaderBytes;
  const u32 index_size = static_cast<u32>(index_region_size(entries, step));
  const u32 table_off = index_off + index_size;
  const u32 key_data_off = table_off + 8 * (count + 1);
  u64 key_bytes = 0;
  u64 value_bytes = 0;
  for (const Update& u : entries) {
    key_bytes += u.key.size();
    value_bytes += 1 + u.value.size();
  }
  const u32 key_data_size = static_cast<u32>(key_bytes);
  const u32 seq_off = key_data_off + key_data_size;
  const u32 value_off = seq_off + 8 * count;
  const u32 total_size = value_off + static_cast<u32>(value_bytes);

  std::string page;
  page.reserve(page_bytes);

  // header
  put_u32(page, kRunPageMagic);
  put_u16(page, 1);  // version
  page.push_back(static_cast<char>(kind));
  page.push_back('\0');  // flags
  put_u32(page, count);
  put_u32(page, step);
  put_u32(page, index_off);
  put_u32(page, ic);
  put_u32(page, index_size);
  put_u32(page, table_off);
  put_u32(page, key_data_off);
  put_u32(page, key_data_size);
  put_u32(page, seq_off);
  put_u32(page, value_off);
  put_u32(page, static_cast<u32>(value_bytes));
  put_u32(page, total_size);
  page.resize(kRunHeaderBytes, '\0');

  // sparse index: offsets into its key blob, then the blob
  if (ic > 0) {
    u32 off = 0;
    for (u32 j = 0; j < ic; ++j) {
      put_u32(page, off);
      off += static_cast<u32>(entries[static_cast<size_t>(j) * step].key.size());
    }
    put_u32(page, off);
    for (u32 j = 0; j < ic; ++j) {
      page.append(entries[static_cast<size_t>(j) * step].key);
    }
  }
  TDB_CHECK_EQ(page.size(), table_off);

  // entry table
  {
    u32 koff = 0;
    u32 voff = 0;
    for (const Update& u : entries) {
      put_u32(page, koff);
      put_u32(page, voff);
      koff += static_cast<u32>(u.key.size());
      voff += static_cast<u32>(1 + u.value.size());
    }
    put_u32(page, koff);
    put_u32(page, voff);
  }
  TDB_CHECK_EQ(page.size(), key_data_off);

  for (const Update& u : entries) {
    page.append(u.key);
  }
  TDB_CHECK_EQ(page.size(), seq_off);
  for (const Update& u : entries) {
    put_u64(page, u.seq);
  }
  TDB_CHECK_EQ(page.size(), value_off);
  for (const Update& u : entries) {
    page.push_back(u.value.is_tombstone() ? '\1' : '\0');
    page.append(u.value.bytes());
  }
  TDB_CHECK_EQ(page.size(), total_size);

  page.resize(page_bytes, '\0');
  return page;
}

StatusOr<RunPageInfo> parse_run_header(std::string_view h)
{
  if (h.size() < kRunHeaderBytes) {
    return Status::contract_violation("run header too short");
  }
  if (get_u32(h.data()) != kRunPageMagic) {
    return Status::contract_violation("bad run page magic");
  }
  RunPageInfo info;
  info.kind = static_cast<RunKind>(static_cast<u8>(h[6]));
  info.count = get_u32(h.data() + 8);
  info.index_step = get_u32(h.data() + 12);
  info.index_off = get_u32(h.data() + 16);
  info.index_count = get_u32(h.data() + 20);
  info.index_size = get_u32(h.data() + 24);
  info.table_off = get_u32(h.data() + 28);
  info.key_data_off = get_u32(h.data() + 32);
  info.key_data_size = get_u32(h.data() + 36);
  info.seq_off = get_u32(h.data() + 40);
  info.value_off = get_u32(h.data() + 44);
  info.value_data_size = get_u32(h.data() + 48);
  info.total_size = get_u32(h.data() + 52);
  return info;
}

StatusOr<RunRef> decode_run_page(std::string_view page)
{
  TDB_TRY_ASSIGN(RunPageInfo info, parse_run_header(page));
  if (page.size() < info.total_size) {
    return Status::contract_violation("run page truncated");
  }
  std::vector<Update> entries;
  entries.reserve(info.count);
  const char* table = page.data() + info.table_off;
  for (u32 i = 0; i < info.count; ++i) {
    const u32 koff = get_u32(table + 8 * i);
    const u32 kend = get_u32(table + 8 * (i + 1));
    const u32 voff = get_u32(table + 8 * i + 4);
    const u32 vend = get_u32(table + 8 * (i + 1) + 4);
    Update u;
    u.key.assign(page.data() + info.key_data_off + koff, kend - koff);
    u.seq = get_u64(page.data() + info.seq_off + 8 * i);
    const char* v = page.data() + info.value_off + voff;
    if (*v == '\1') {
      u.value = Value::tombstone();
    } else {
      u.value = Value::of(std::string{v + 1, vend - voff - 1});
    }
    entries.push_back(std::move(u));
  }
  return EntryRun::make(std::move(entries));
}

StatusOr<RunRef> load_run(PageStore& store, PageId id, u8 priority)
{
  TDB_TRY_ASSIGN(std::string header, store.read_range(id, 0, kRunHeaderBytes, priority));
  TDB_TRY_ASSIGN(RunPageInfo info, parse_run_header(header));
  TDB_TRY_ASSIGN(std::string page, store.read_range(id, 0, info.total_size, priority));
  return decode_run_page(page);
}

StatusOr<RunPageView> RunPageView::open(PageStore& store, PageId id, u8 priority)
{
  RunPageView view{store, id, priority};
  TDB_TRY_ASSIGN(std::string header, store.read_range(id, 0, kRunHeaderBytes, priority));
  TDB_TRY_ASSIGN(view.info_, parse_run_header(header));
  return view;
}

StatusOr<std::pair<u32, u32>> RunPageView::index_range(std::string_view key)
{
  if (info_.index_step == 0 || info_.index_count == 0) {
    return std::pair<u32, u32>{0, info_.count};
  }
  TDB_TRY_ASSIGN(std::string region, store_->read_range(id_, info_.index_off, info_.index_size, priority_));
  const char* offs = region.data();
  const char* blob = region.data() + 4ull * (info_.index_count + 1);

  const auto index_key = [&](u32 j) -> std::string_view {
    const u32 a = get_u32(offs + 4 * j);
    const u32 b = get_u32(offs + 4 * (j + 1));
    return std::string_view{blob + a, b - a};
  };

  // Last index slot whose key is <= `key`.
  if (key < index_key(0)) {
    return std::pair<u32, u32>{0, 0};
  }
  u32 lo = 0;
  u32 hi = info_.index_count;  // exclusive
  while (hi - lo > 1) {
    const u32 mid = lo + (hi - lo) / 2;
    if (index_key(mid) <= key) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const u32 begin = lo * info_.index_step;
  const u32 end = std::min<u32>(info_.count, (lo + 1) * info_.index_step);
  return std::pair<u32, u32>{begin, end};
}

StatusOr<std::pair<u32, bool>> RunPageView::search(std::string_view key)
{
  if (info_.count == 0) {
    return std::pair<u32, bool>{0, false};
  }
  TDB_TRY_ASSIGN(auto range, index_range(key));
  u32 lo = range.first;
  u32 hi = range.second;  // lower_bound may equal hi
  if (lo >= hi) {
    return std::pair<u32, bool>{lo, false};
  }

  // Read the covering entry-table slice and key bytes in one shot each.
  TDB_TRY_ASSIGN(std::string table,
                 store_->read_range(id_, info_.table_off + 8ull * lo, 8ull * (hi - lo + 1), priority_));
  const u32 first_koff = get_u32(table.data());
  const u32 last_koff = get_u32(table.data() + 8ull * (hi - lo));
  TDB_TRY_ASSIGN(std::string keys,
                 store_->read_range(id_, info_.key_data_off + first_koff, last_koff - first_koff, priority_));

  const auto key_at = [&](u32 i) -> std::string_view {
    const u32 a = get_u32(table.data() + 8ull * (i - lo));
    const u32 b = get_u32(table.data() + 8ull * (i - lo + 1));
    return std::string_view{keys.data() + (a - first_koff), b - a};
  };

  u32 a = lo;
  u32 b = hi;
  while (a < b) {
    const u32 mid = a + (b - a) / 2;
    if (key_at(mid) < key) {
      a = mid + 1;
    } else {
      b = mid;
    }
  }
  const bool exact = a < hi && a < info_.count && key_at(a) == key;
  return std::pair<u32, bool>{a, exact};
}

StatusOr<u32> RunPageView::lower_bound(std::string_view key)
{
  // search() narrows via the sparse index; its position is already the
  // global lower bound (the next index key is strictly greater).
  TDB_TRY_ASSIGN(auto res, search(key));
  return res.first;
}

StatusOr<std::optional<RunPageView::Hit>> RunPageView::find(std::string_view key)
{
  using Result = std::optional<RunPageView::Hit>;
  TDB_TRY_ASSIGN(auto res, search(key));
  if (!res.second) {
    return Result{std::nullopt};
  }
  const u32 i = res.first;
  TDB_TRY_ASSIGN(std::string row, store_->read_range(id_, info_.table_off + 8ull * i, 16, priority_));
  const u32 voff = get_u32(row.data() + 4);
  const u32 vend = get_u32(row.data() + 12);
  TDB_TRY_ASSIGN(std::string seq_bytes, store_->read_range(id_, info_.seq_off + 8ull * i, 8, priority_));
  TDB_TRY_ASSIGN(std::string value, store_->read_range(id_, info_.value_off + voff, vend - voff, priority_));

  Hit hit;
  hit.index = i;
  hit.seq = get_u64(seq_bytes.data());
  hit.tombstone = value[0] == '\1';
  if (!hit.tombstone) {
    hit.value = value.substr(1);
  }
  return Result{hit};
}

StatusOr<std::string> RunPageView::key_at(u32 i)
{
  TDB_CHECK_LT(i, info_.count);
  TDB_TRY_ASSIGN(std::string row, store_->read_range(id_, info_.table_off + 8ull * i, 16, priority_));
  const u32 koff = get_u32(row.data());
  const u32 kend = get_u32(row.data() + 8);
  return store_->read_range(id_, info_.key_data_off + koff, kend - koff, priority_);
}

}  // namespace turtledb
