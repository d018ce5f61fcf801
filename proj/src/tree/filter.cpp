#include <turtledb/tree/filter.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>
#include <turtledb/core/hash.hpp>

#include <algorithm>
#include <cmath>

namespace turtledb {

namespace {

inline void probe_positions(std::string_view key, u32 block_count, u32 probes, u32* block_out, u32* bits_out)
{
  const u64 h1 = fnv1a64(key);
  u64 h2 = mix64(h1) | 1;
  *block_out = static_cast<u32>(h1 % block_count);
  u64 g = h1;
  for (u32 i = 0; i < probes; ++i) {
    bits_out[i] = static_cast<u32>(g % (kFilterBlockBytes * 8));
    g += h2;
  }
}

}  // namespace

std::string build_filter_page(const std::vector<std::string_view>& keys, u32 bits_per_key, u64 page_bytes)
{
  const u64 payload = page_bytes - kFilterHeaderBytes;
  u64 wanted_bits = static_cast<u64>(keys.size()) * bits_per_key;
  u64 block_count = (wanted_bits + kFilterBlockBytes * 8 - 1) / (kFilterBlockBytes * 8);
  block_count = std::min<u64>(block_count, payload / kFilterBlockBytes);
  if (!keys.empty() && block_count == 0) {
    block_count = 1;
  }

  u32 probes = static_cast<u32>(std::lround(0.69 * bits_per_key));
  probes = std::clamp<u32>(probes, 1, 15);

  std::string page;
  put_u32(page, kFilterMagic);
  put_u16(page, 1);  // version
  put_u16(page, 0);
  put_u32(page, static_cast<u32>(keys.size()));
  put_u32(page, static_cast<u32>(block_count));
  put_u32(page, probes);
  put_u32(page, 0);  // reserved
  TDB_CHECK_EQ(page.size(), kFilterHeaderBytes);
  page.resize(kFilterHeaderBytes + block_count * kFilterBlockBytes, '\0');

  u32 bits[16];
  for (std::string_view key : keys) {
    if (block_count == 0) {
      break;
    }
    u32 block;
    probe_positions(key, static_cast<u32>(block_count), probes, &block, bits);
    char* base = page.data() + kFilterHeaderBytes + static_cast<u64>(block) * kFilterBlockBytes;
    for (u32 i = 0; i < probes; ++i) {
      base[bits[i] / 8] = static_cast<char>(base[bits[i] / 8] | (1 << (bits[i] % 8)));
    }
  }
  page.resize(page_bytes, '\0');
  return page;
}

StatusOr<FilterView> FilterView::parse(std::string_view page)
{
  if (page.size() < kFilterHeaderBytes || get_u32(page.data()) != kFilterMagic) {
    return Status::contract_violation("bad filter page");
  }
  FilterView view;
  view.key_count_ = get_u32(page.data() + 8);
  view.block_count_ = get_u32(page.data() + 12);
  view.probes_ = get_u32(page.data() + 16);
  const u64 need = kFilterHeaderBytes + static_cast<u64>(view.block_count_) * kFilterBlockBytes;
  if (page.size() < need) {
    return Status::contract_violation("filter page truncated");
  }
  view.blocks_ = page.substr(kFilterHeaderBytes, need - kFilterHeaderBytes);
  return view;
}

bool FilterView::may_contain(std::string_view key) const
{
  if (key_count_ == 0 || block_count_ == 0) {
    return false;
  }
  u32 bits[16];
  u32 block;
  probe_positions(key, block_count_, probes_, &block, bits);
  const char* base = blocks_.data() + static_cast<u64>(block) * kFilterBlockBytes;
  for (u32 i = 0; i < probes_; ++i) {
    if ((base[bits[i] / 8] & (1 << (bits[i] % 8))) == 0) {
      return false;
    }
  }
  return true;
}

}  // namespace turtledb
