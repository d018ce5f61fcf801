#include <turtledb/tree/node_page.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>

#include <bit>

namespace turtledb {

StatusOr<std::string> serialize_node(const Node& node)
{
  const u32 pivot_count = node.pivot_count();
  TDB_CHECK_GT(pivot_count, 0u);
  TDB_CHECK_EQ(node.pivot_keys.size(), pivot_count + 1);

  std::string out;
  put_u32(out, kNodePageMagic);
  put_u16(out, 1);  // version
  out.push_back('\3');
  out.push_back(node.upper_inf ? '\1' : '\0');
  put_u32(out, static_cast<u32>(node.height));
  put_u32(out, pivot_count);
  put_u32(out, static_cast<u32>(node.levels.size()));
  put_u32(out, 0);  // total_size patched below
  out.resize(kNodeHeaderBytes, '\0');

  for (const Child& child : node.children) {
    if (child.is_leaf()) {
      TDB_CHECK(child.leaf().page.valid());
      put_u64(out, child.leaf().page.v);
      put_u64(out, child.leaf().filter.v);
    } else {
      TDB_CHECK(child.node()->page.valid());
      put_u64(out, child.node()->page.v);
      put_u64(out, 0);
    }
  }

  u32 off = 0;
  for (const Key& k : node.pivot_keys) {
    put_u32(out, off);
    off += static_cast<u32>(k.size());
  }
  put_u32(out, off);
  for (const Key& k : node.pivot_keys) {
    out.append(k);
  }

  for (const BufferLevel& level : node.levels) {
    put_u16(out, static_cast<u16>(level.segments.size()));
  }

  for (const BufferLevel& level : node.levels) {
    for (const Segment& seg : level.segments) {
      if (!seg.page.valid()) {
        return Status::contract_violation("serialize_node: dirty segment");
      }
      put_u64(out, seg.page.v);
      put_u32(out, seg.entry_count);
      put_u64(out, seg.active_pivots);
      put_u64(out, seg.flushed_pivots);
      put_u16(out, static_cast<u16>(seg.min_key.size()));
      put_u16(out, static_cast<u16>(seg.max_key.size()));
      out.append(seg.min_key);
      out.append(seg.max_key);
      for (u64 b : seg.active_bytes) {
        put_u64(out, b);
      }
      for (u32 b : seg.flushed_upper) {
        put_u32(out, b);
      }
    }
  }

  encode_u32_at(out, 20, static_cast<u32>(out.size()));
  return out;
}

StatusOr<ParsedNode> parse_node(std::string_view page, u32 level_count)
{
  if (page.size() < kNodeHeaderBytes || get_u32(page.data()) != kNodePageMagic) {
    return Status::contract_violation("bad node page magic");
  }
  ParsedNode parsed;
  Node& node = parsed.node;
  node.upper_inf = page[7] != '\0';
  node.height = static_cast<i32>(get_u32(page.data() + 8));
  const u32 pivot_count = get_u32(page.data() + 12);
  const u32 stored_levels = get_u32(page.data() + 16);
  const u32 total_size = get_u32(page.data() + 20);
  if (page.size() < total_size) {
    return Status::contract_violation("node page truncated");
  }

  size_t pos = kNodeHeaderBytes;
  for (u32 i = 0; i < pivot_count; ++i) {
    PageId child{get_u64(page.data() + pos)};
    PageId filter{get_u64(page.data() + pos + 8)};
    parsed.child_refs.emplace_back(child, filter);
    pos += 16;
  }

  const char* key_offs = page.data() + pos;
  pos += 4ull * (pivot_count + 2);
  const char* key_blob = page.data() + pos;
  node.pivot_keys.resize(pivot_count + 1);
  for (u32 i = 0; i <= pivot_count; ++i) {
    const u32 a = get_u32(key_offs + 4ull * i);
    const u32 b = get_u32(key_offs + 4ull * (i + 1));
    node.pivot_keys[i].assign(key_blob + a, b - a);
  }
  pos += get_u32(key_offs + 4ull * (pivot_count + 1));

  std::vector<u16> seg_counts(stored_levels);
  for (u32 i = 0; i < stored_levels; ++i) {
    seg_counts[i] = get_u16(page.data() + pos);
    pos += 2;
  }

  node.levels.resize(std::max(level_count, stored_levels));
  for (u32 li = 0; li < stored_levels; ++li) {
    for (u32 si = 0; si < seg_counts[li]; ++si) {
      Segment seg;
      seg.page = PageId{get_u64(page.data() + pos)};
      seg.entry_count = get_u32(page.data() + pos + 8);
      seg.active_pivots = get_u64(page.data() + pos + 12);
      seg.flushed_pivots = get_u64(page.data() + pos + 20);
      const u16 min_len = get_u16(page.data() + pos + 28);
      const u16 max_len = get_u16(page.data() + pos + 30);
      pos += 32;
      seg.min_key.assign(page.data() + pos, min_len);
      pos += min_len;
      seg.max_key.assign(page.data() + pos, max_len);
      pos += max_len;
      const int active_n = std::popcount(seg.active_pivots);
      const int flushed_n = std::popcount(seg.flushed_pivots);
      for (int i = 0; i < active_n; ++i) {
        seg.active_bytes.push_back(get_u64(page.data() + pos));
        pos += 8;
      }
      for (int i = 0; i < flushed_n; ++i) {
        seg.flushed_upper.push_back(get_u32(page.data() + pos));
        pos += 4;
      }
      node.levels[li].segments.push_back(std::move(seg));
    }
  }
  return parsed;
}

}  // namespace turtledb
